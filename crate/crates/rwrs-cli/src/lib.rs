//! Command-line orchestration: configuration, seeding, worker control and
//! report persistence for all experiments.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use rwrs_core::report::{write_csv, CriterionLine, ExperimentReport};

pub use config::Config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    ConfigParse(String),
    #[error("unknown experiment: {0}")]
    UnknownExperiment(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no artifacts found in {0}")]
    EmptyDirectory(PathBuf),
}

impl CliError {
    /// Distinct nonzero exit code per error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigParse(_) => 2,
            CliError::UnknownExperiment(_) => 3,
            CliError::Io(_) => 4,
            CliError::EmptyDirectory(_) => 5,
        }
    }
}

pub const EXPERIMENTS: &[&str] = &[
    "model-check",
    "exact-dist",
    "green-kubo",
    "brownian",
    "moments",
    "lln",
    "clt",
    "local-limit",
    "ratio",
    "functional",
    "batch",
];

/// Run one experiment inside a worker pool of the requested size
/// (0 = library default) and write its artifacts under `out_dir`.
///
/// Results are identical for any worker count: parallel loops derive
/// per-replicate streams and reduce in a fixed order.
pub fn run_experiment(
    name: &str,
    cfg: &Config,
    out_dir: &Path,
    workers: usize,
) -> Result<ExperimentReport, CliError> {
    let seed = cfg.get_u64("experiment", "seed", 12345)?;
    let runner = match name {
        "model-check" => commands::run_model_check,
        "exact-dist" => commands::run_exact_dist,
        "green-kubo" => commands::run_green_kubo,
        "brownian" => commands::run_brownian,
        "moments" => commands::run_moments,
        "lln" => commands::run_lln,
        "clt" => commands::run_clt,
        "local-limit" => commands::run_local_limit,
        "ratio" => commands::run_ratio,
        "functional" => commands::run_functional,
        "batch" => commands::run_batch,
        other => return Err(CliError::UnknownExperiment(other.to_string())),
    };

    let started = Instant::now();
    let outcome = if workers == 0 {
        runner(cfg, seed)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::ConfigParse(format!("workers: {e}")))?;
        pool.install(|| runner(cfg, seed))?
    };
    let elapsed = started.elapsed();

    std::fs::create_dir_all(out_dir)?;
    let stem = name.replace('-', "_");
    outcome.report.write_json(&out_dir.join(format!("{stem}.json")))?;
    for table in &outcome.tables {
        write_csv(
            &out_dir.join(format!("{}.csv", table.name)),
            &table.header,
            &table.rows,
        )?;
    }
    if let Some(samples) = &outcome.raw_samples {
        rwrs_core::report::write_raw_f64_le(&out_dir.join(format!("{stem}_samples.bin")), samples)?;
    }

    // timing goes to the console only; artifacts stay byte-reproducible
    println!(
        "{name}: wrote {} artifact(s) to {} in {:.2}s",
        outcome.tables.len() + 1,
        out_dir.display(),
        elapsed.as_secs_f64()
    );
    for line in &outcome.report.criteria {
        print_criterion(line);
    }
    Ok(outcome.report)
}

pub fn print_criterion(line: &CriterionLine) {
    println!(
        "[{}] {}: {}",
        if line.pass { "PASS" } else { "FAIL" },
        line.id,
        line.detail
    );
}

/// Consolidated acceptance summary over every report in a directory.
#[derive(Debug)]
pub struct ReportSummary {
    pub lines: Vec<(String, CriterionLine)>,
    pub overall_pass: bool,
}

pub fn consolidate_reports(dir: &Path) -> Result<ReportSummary, CliError> {
    let mut lines = Vec::new();
    let mut found_any = false;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|_| CliError::EmptyDirectory(dir.to_path_buf()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    entries.sort();
    for path in entries {
        let Ok(bytes) = std::fs::read(&path) else { continue };
        let Ok(report) = serde_json::from_slice::<ExperimentReport>(&bytes) else {
            continue;
        };
        found_any = true;
        for line in report.criteria {
            lines.push((report.experiment.clone(), line));
        }
    }
    if !found_any {
        return Err(CliError::EmptyDirectory(dir.to_path_buf()));
    }
    let overall_pass = lines.iter().all(|(_, l)| l.pass);
    Ok(ReportSummary { lines, overall_pass })
}

pub fn run_report(dir: &Path) -> Result<bool, CliError> {
    let summary = consolidate_reports(dir)?;
    if summary.lines.is_empty() {
        println!("no configured criteria in {}", dir.display());
    }
    for (experiment, line) in &summary.lines {
        println!(
            "[{}] {experiment} / {}: {}",
            if line.pass { "PASS" } else { "FAIL" },
            line.id,
            line.detail
        );
    }
    if summary.overall_pass {
        println!("overall: PASS");
    } else {
        let failing: Vec<String> = summary
            .lines
            .iter()
            .filter(|(_, l)| !l.pass)
            .map(|(e, l)| format!("{e}/{}", l.id))
            .collect();
        println!("overall: FAIL ({})", failing.join(", "));
    }
    Ok(summary.overall_pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scratch_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "rwrs-cli-test-{tag}-{}",
            std::process::id()
        ));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn unknown_experiment_rejected() {
        let cfg = Config::parse("").unwrap();
        let dir = scratch_dir("unknown");
        let err = run_experiment("frobnicate", &cfg, &dir, 1).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn empty_directory_rejected() {
        let dir = scratch_dir("empty");
        let err = consolidate_reports(&dir).unwrap_err();
        assert_eq!(err.exit_code(), 5);
    }

    #[test]
    fn exact_dist_artifacts_and_check() {
        let mut cfg = Config::parse("[experiment]\nseed = 3\nk = 4\nmc_reps = 20000\n").unwrap();
        cfg.set("experiment", "tv_max", "0.02".into());
        let dir = scratch_dir("exact");
        let report = run_experiment("exact-dist", &cfg, &dir, 1).unwrap();
        assert!(dir.join("exact_dist.json").exists());
        assert!(dir.join("exact_dist.csv").exists());
        assert_eq!(report.criteria.len(), 1);
        assert!(report.criteria[0].pass, "{}", report.criteria[0].detail);

        // consolidated report sees the criterion
        let summary = consolidate_reports(&dir).unwrap();
        assert!(summary.overall_pass);
        assert_eq!(summary.lines.len(), 1);
    }

    #[test]
    fn artifacts_identical_across_worker_counts() {
        let cfg = Config::parse(
            "[experiment]\nseed = 11\nn = 256\nreps = 2000\nstatistic = local_time_zero_quarter\n",
        )
        .unwrap();
        let mut bytes = Vec::new();
        for workers in [1usize, 2, 4] {
            let dir = scratch_dir(&format!("repro{workers}"));
            run_experiment("batch", &cfg, &dir, workers).unwrap();
            bytes.push((
                std::fs::read(dir.join("batch.json")).unwrap(),
                std::fs::read(dir.join("batch.csv")).unwrap(),
            ));
        }
        assert_eq!(bytes[0], bytes[1]);
        assert_eq!(bytes[0], bytes[2]);
    }

    #[test]
    fn mixed_report_fails_listing_criteria() {
        let dir = scratch_dir("mixed");
        let mut pass = rwrs_core::report::ExperimentReport::new(
            "good",
            1,
            serde_json::json!({}),
            serde_json::json!({}),
        );
        pass.criteria.push(rwrs_core::report::CriterionLine {
            id: "ok".into(),
            pass: true,
            detail: "fine".into(),
        });
        pass.write_json(&dir.join("good.json")).unwrap();
        let mut fail = rwrs_core::report::ExperimentReport::new(
            "bad",
            1,
            serde_json::json!({}),
            serde_json::json!({}),
        );
        fail.criteria.push(rwrs_core::report::CriterionLine {
            id: "broken".into(),
            pass: false,
            detail: "nope".into(),
        });
        fail.write_json(&dir.join("bad.json")).unwrap();

        let summary = consolidate_reports(&dir).unwrap();
        assert!(!summary.overall_pass);
        let failing: Vec<&str> = summary
            .lines
            .iter()
            .filter(|(_, l)| !l.pass)
            .map(|(e, _)| e.as_str())
            .collect();
        assert_eq!(failing, vec!["bad"]);
        assert!(!run_report(&dir).unwrap());
    }

    #[test]
    fn rerun_is_byte_identical() {
        let cfg = Config::parse("[experiment]\nseed = 7\nk = 3\n").unwrap();
        let d1 = scratch_dir("rerun1");
        let d2 = scratch_dir("rerun2");
        run_experiment("exact-dist", &cfg, &d1, 1).unwrap();
        run_experiment("exact-dist", &cfg, &d2, 1).unwrap();
        assert_eq!(
            std::fs::read(d1.join("exact_dist.json")).unwrap(),
            std::fs::read(d2.join("exact_dist.json")).unwrap()
        );
        assert_eq!(
            std::fs::read(d1.join("exact_dist.csv")).unwrap(),
            std::fs::read(d2.join("exact_dist.csv")).unwrap()
        );
    }
}
