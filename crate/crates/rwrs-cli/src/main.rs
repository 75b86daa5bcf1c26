use std::path::PathBuf;
use std::process::ExitCode;

use rwrs_cli::{run_experiment, run_report, CliError, Config, EXPERIMENTS};

const USAGE: &str = "\
rwrs — random walk in random scenery simulation and verification toolkit

USAGE:
  rwrs <experiment> [FLAGS]
  rwrs report --out DIR

EXPERIMENTS:
  model-check   validate the model and echo its derived structure
  exact-dist    exact distribution of Z_k as value,numerator,denominator CSV
  green-kubo    limiting variance of a centered observable, in d-blocks
  brownian      local-time functionals: inverse norms, V_k distances, limit endpoint
  moments       limit local-time moments with sandwich bounds
  lln           moments of n^{-1/4} sum f(Z_k) against limit targets
  clt           moments of n^{-1/8} sum f(Z_k) for centered f
  local-limit   scaled point probabilities n^{3/4} P(Z_n = a)
  ratio         ratio ergodic averages against counting-measure integrals
  functional    KS distance between scaled endpoints and the limit law
  batch         one named statistic, one CSV row
  report        consolidate PASS/FAIL lines from artifacts in --out

FLAGS:
  --config PATH     configuration file (flat key-value with [sections])
  --seed N          override experiment.seed (default 12345)
  --workers N       worker threads (0 = library default)
  --out DIR         artifact directory (default runs)
  --n LIST          override experiment.n (comma- or space-separated)
  --reps N          override experiment.reps
  --set SEC.KEY=V   raw override, repeatable
  --help            this text

Exit codes: 0 success, 1 report FAIL, 2 config, 3 unknown experiment,
4 io, 5 empty report directory.
";

fn parse_and_run() -> Result<bool, CliError> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        print!("{USAGE}");
        return Ok(true);
    }
    let experiment = args[0].clone();

    let mut config_path: Option<PathBuf> = None;
    let mut out_dir = PathBuf::from("runs");
    let mut workers = 0usize;
    let mut overrides: Vec<String> = Vec::new();

    let mut i = 1;
    let next = |i: &mut usize| -> Result<String, CliError> {
        *i += 1;
        args.get(*i)
            .cloned()
            .ok_or_else(|| CliError::ConfigParse(format!("{} needs a value", args[*i - 1])))
    };
    while i < args.len() {
        match args[i].as_str() {
            "--config" => config_path = Some(PathBuf::from(next(&mut i)?)),
            "--seed" => {
                let v = next(&mut i)?;
                overrides.push(format!("experiment.seed={v}"));
            }
            "--workers" => {
                let v = next(&mut i)?;
                workers = v
                    .parse()
                    .map_err(|_| CliError::ConfigParse(format!("bad --workers `{v}`")))?;
            }
            "--out" => out_dir = PathBuf::from(next(&mut i)?),
            "--n" => {
                let v = next(&mut i)?.replace(',', " ");
                overrides.push(format!("experiment.n={v}"));
            }
            "--reps" => {
                let v = next(&mut i)?;
                overrides.push(format!("experiment.reps={v}"));
            }
            "--set" => overrides.push(next(&mut i)?),
            "--help" | "-h" => {
                print!("{USAGE}");
                return Ok(true);
            }
            other => {
                return Err(CliError::ConfigParse(format!("unknown flag `{other}`")));
            }
        }
        i += 1;
    }

    if experiment == "report" {
        return run_report(&out_dir);
    }
    if !EXPERIMENTS.contains(&experiment.as_str()) {
        return Err(CliError::UnknownExperiment(experiment));
    }

    let mut cfg = match config_path {
        Some(p) => Config::load(&p)?,
        None => Config::default(),
    };
    for o in &overrides {
        cfg.set_override(o)?;
    }
    run_experiment(&experiment, &cfg, &out_dir, workers)?;
    Ok(true)
}

fn main() -> ExitCode {
    match parse_and_run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
