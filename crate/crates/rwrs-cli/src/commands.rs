//! Experiment implementations behind the CLI subcommands.
//!
//! Every experiment derives its randomness from `(seed, experiment name)`
//! through the splittable stream tree, computes inside a bounded worker
//! pool, and emits one CSV table plus one JSON report. Internal theoretical
//! targets always use stream ids disjoint from the empirical samplers.

use std::collections::BTreeMap;

use serde_json::json;

use rwrs_core::brownian;
use rwrs_core::green_kubo::{self, BlockSource};
use rwrs_core::lattice::ModelConfig;
use rwrs_core::limits::{self, ConvergenceTable};
use rwrs_core::moments::{self, Component};
use rwrs_core::observable::Observable;
use rwrs_core::oracle::ExactOracle;
use rwrs_core::report::{fnv1a, CriterionLine, ExperimentReport};
use rwrs_core::rng::StreamRng;
use rwrs_core::stats::SampleStats;
use rwrs_core::walk::{self, Statistic};

use crate::config::Config;
use crate::CliError;

/// One CSV artifact.
pub struct CsvTable {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Outcome {
    pub report: ExperimentReport,
    pub tables: Vec<CsvTable>,
    /// Raw per-replicate samples for the binary dump, when requested.
    pub raw_samples: Option<Vec<f64>>,
}

/// Stream root for an experiment: `(seed, fnv(name), fnv(purpose))`.
pub fn stream(seed: u64, experiment: &str, purpose: &str) -> StreamRng {
    StreamRng::from_seed(seed)
        .split(fnv1a(experiment.as_bytes()))
        .split(fnv1a(purpose.as_bytes()))
}

fn table_from_convergence(name: &str, t: &ConvergenceTable) -> CsvTable {
    CsvTable {
        name: name.to_string(),
        header: ConvergenceTable::csv_header(),
        rows: t.csv_rows(),
    }
}

fn fmt(x: f64) -> String {
    x.to_string()
}

pub fn run_model_check(cfg: &Config, seed: u64) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let payload = serde_json::to_value(&model).expect("model serializes");
    let report = ExperimentReport::new("model_check", seed, cfg.to_json(), payload);
    let rows = vec![vec![
        model.periodicity.d.to_string(),
        model.periodicity.alpha.to_string(),
        model.periodicity.alpha0.to_string(),
        fmt(model.sigma_xi_sq),
    ]];
    Ok(Outcome {
        report,
        tables: vec![CsvTable {
            name: "model_check".into(),
            header: vec!["d", "alpha", "alpha0", "sigma_xi_sq"],
            rows,
        }],
        raw_samples: None,
    })
}

pub fn run_exact_dist(cfg: &Config, seed: u64) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let k = cfg.get_u64("experiment", "k", 10)?;
    let cap = cfg.get_u64("experiment", "cap", 20)?;
    let oracle = ExactOracle { cap };
    let pmf = oracle
        .z_pmf(&model, k)
        .map_err(|e| CliError::ConfigParse(format!("exact-dist: {e}")))?;

    let rows: Vec<Vec<String>> = pmf
        .atoms()
        .iter()
        .map(|(v, p)| vec![v.to_string(), p.numer().to_string(), p.denom().to_string()])
        .collect();

    let mut report = ExperimentReport::new(
        "exact_dist",
        seed,
        cfg.to_json(),
        json!({
            "k": k,
            "atoms": pmf
                .atoms()
                .iter()
                .map(|(v, p)| json!([v, p.numer().to_string(), p.denom().to_string()]))
                .collect::<Vec<_>>(),
        }),
    );

    // optional oracle-vs-Monte-Carlo check
    let reps = cfg.get_u64("experiment", "mc_reps", 0)?;
    if reps > 0 {
        let tv_max = cfg.get_f64("experiment", "tv_max", 0.005)?;
        let root = stream(seed, "exact_dist", "mc");
        let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
        for r in 0..reps {
            let mut rng = root.split(r);
            *counts.entry(walk::endpoint(&model, k, &mut rng)).or_insert(0) += 1;
        }
        let tv = pmf.tv_distance_from_counts(&counts, reps);
        report.criteria.push(CriterionLine {
            id: format!("oracle_mc_tv_k{k}"),
            pass: tv <= tv_max,
            detail: format!("tv={tv:.6} <= {tv_max}"),
        });
    }

    Ok(Outcome {
        report,
        tables: vec![CsvTable {
            name: "exact_dist".into(),
            header: vec!["value", "numerator", "denominator"],
            rows,
        }],
        raw_samples: None,
    })
}

pub fn run_green_kubo(cfg: &Config, seed: u64) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let f = cfg.observable("f", &Observable::delta_diff(1))?;
    let exact_horizon = cfg.get_i64("experiment", "exact_horizon", 4)?;
    let mc_horizon = cfg.get_i64("experiment", "mc_horizon", 40)?;
    let mc_budget = cfg.get_u64("experiment", "mc_budget", 100_000)?;
    let warn_only = cfg.get_bool("experiment", "warn_only", false)?;
    let root = stream(seed, "green_kubo", "blocks");

    let result = green_kubo::sigma2_f(
        &model,
        &f,
        exact_horizon,
        mc_horizon,
        mc_budget,
        &root,
        !warn_only,
    )
    .map_err(|e| CliError::ConfigParse(format!("green-kubo: {e}")))?;

    let rows: Vec<Vec<String>> = result
        .blocks
        .iter()
        .map(|b| {
            vec![
                b.k.to_string(),
                fmt(b.value),
                match b.source {
                    BlockSource::Exact => "exact".to_string(),
                    BlockSource::MonteCarlo => "mc".to_string(),
                },
                fmt(b.stderr),
            ]
        })
        .collect();

    let mut report = ExperimentReport::new(
        "green_kubo",
        seed,
        cfg.to_json(),
        serde_json::to_value(&result).expect("result serializes"),
    );

    if cfg.get_bool("experiment", "stability_check", false)? {
        let stability_pct = cfg.get_f64("experiment", "stability_pct", 2.0)?;
        let wider = green_kubo::sigma2_f(
            &model,
            &f,
            exact_horizon,
            mc_horizon + mc_horizon / 2,
            mc_budget,
            &root,
            !warn_only,
        )
        .map_err(|e| CliError::ConfigParse(format!("green-kubo: {e}")))?;
        let rel = (wider.sigma2 - result.sigma2).abs() / result.sigma2.abs();
        report.criteria.push(CriterionLine {
            id: "sigma2_horizon_stability".into(),
            pass: rel * 100.0 <= stability_pct,
            detail: format!(
                "sigma2={} vs {} at +50% horizon: {:.3}% <= {stability_pct}%",
                result.sigma2,
                wider.sigma2,
                rel * 100.0
            ),
        });
    }

    Ok(Outcome {
        report,
        tables: vec![CsvTable {
            name: "green_kubo".into(),
            header: vec!["k", "value", "source", "stderr"],
            rows,
        }],
        raw_samples: None,
    })
}

pub fn run_brownian(cfg: &Config, seed: u64) -> Result<Outcome, CliError> {
    let n_disc = cfg.get_u64("experiment", "n_disc", 1 << 14)?;
    let budget = cfg.get_u64("experiment", "budget", 10_000)?;
    let k_list = cfg.get_list_u64("experiment", "k_list", &[4, 8, 16, 32, 64])?;
    let mom_groups = cfg.get_usize("experiment", "mom_groups", 20)?;

    let inv_samples =
        brownian::l2_inverse_samples(n_disc, budget, &stream(seed, "brownian", "inv_norm"));
    let inv = SampleStats::from_slice(&inv_samples);
    let inv_mom = rwrs_core::stats::median_of_means(&inv_samples, mom_groups);

    let mut rows = vec![
        vec![
            "inv_norm_mean".into(),
            fmt(inv.mean()),
            fmt(inv.stderr()),
            budget.to_string(),
        ],
        vec![
            "inv_norm_median_of_means".into(),
            fmt(inv_mom),
            String::new(),
            budget.to_string(),
        ],
    ];

    let vk_root = stream(seed, "brownian", "vk");
    let mut vk_means = Vec::new();
    let mut vk_payload = Vec::new();
    for &k in &k_list {
        let (stats, degenerate) = brownian::vk_inverse_moment(k, n_disc, budget, &vk_root.split(k));
        vk_means.push(stats.mean());
        rows.push(vec![
            format!("vk_inverse_distance_k{k}"),
            fmt(stats.mean()),
            fmt(stats.stderr()),
            stats.count().to_string(),
        ]);
        vk_payload.push(json!({
            "k": k,
            "mean": stats.mean(),
            "stderr": stats.stderr(),
            "degenerate": degenerate,
        }));
    }
    let slope = if k_list.len() >= 2 {
        brownian::exponent_fit(&k_list, &vk_means)
    } else {
        f64::NAN
    };
    rows.push(vec![
        "vk_exponent_slope".into(),
        fmt(slope),
        String::new(),
        k_list.len().to_string(),
    ]);

    let delta = SampleStats::from_slice(&brownian::delta_endpoint_samples(
        n_disc,
        budget,
        &stream(seed, "brownian", "delta"),
    ));
    rows.push(vec![
        "delta_endpoint_mean".into(),
        fmt(delta.mean()),
        fmt(delta.stderr()),
        budget.to_string(),
    ]);
    rows.push(vec![
        "delta_endpoint_variance".into(),
        fmt(delta.variance()),
        String::new(),
        budget.to_string(),
    ]);

    let mut tables = vec![];
    if cfg.get_bool("experiment", "profile_dump", false)? {
        let mut rng = stream(seed, "brownian", "profile_dump");
        let grid = brownian::sample_local_time_grid(n_disc, &[1.0], &mut rng)
            .pop()
            .expect("one profile");
        tables.push(CsvTable {
            name: "brownian_profile".into(),
            header: vec!["site", "value"],
            rows: grid
                .sites()
                .map(|(s, v)| vec![s.to_string(), fmt(v)])
                .collect(),
        });
    }

    let mut report = ExperimentReport::new(
        "brownian",
        seed,
        cfg.to_json(),
        json!({
            "n_disc": n_disc,
            "inv_norm": { "mean": inv.mean(), "stderr": inv.stderr(), "median_of_means": inv_mom },
            "vk": vk_payload,
            "vk_exponent_slope": slope,
            "delta": { "mean": delta.mean(), "variance": delta.variance() },
        }),
    );

    if let Some(band) = cfg.get("experiment", "slope_band") {
        let parts: Vec<f64> = band
            .split_whitespace()
            .map(|t| t.parse().unwrap_or(f64::NAN))
            .collect();
        if parts.len() == 2 {
            report.criteria.push(CriterionLine {
                id: "vk_exponent_band".into(),
                pass: slope >= parts[0] && slope <= parts[1],
                detail: format!("slope={slope:.3} in [{}, {}]", parts[0], parts[1]),
            });
        }
    }

    tables.insert(
        0,
        CsvTable {
            name: "brownian".into(),
            header: vec!["quantity", "value", "stderr", "samples"],
            rows,
        },
    );
    Ok(Outcome {
        report,
        tables,
        raw_samples: None,
    })
}

pub fn run_moments(cfg: &Config, seed: u64) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let m_list = cfg.get_list_u64("experiment", "m", &[1, 2, 3])?;
    let simplex_budget = cfg.get_u64("experiment", "simplex_budget", 20_000)?;
    let path_budget = cfg.get_u64("experiment", "path_budget", 1)?;
    let n_disc = cfg.get_u64("experiment", "n_disc", 1 << 12)?;
    let comp_budget = cfg.get_u64("experiment", "component_budget", 10_000)?;
    let comp_n_disc = cfg.get_u64("experiment", "component_n_disc", 1 << 14)?;
    let sigma = model.sigma_xi();

    // matched-resolution component: see moments::inv_norm_time_mixed
    let inv = moments::inv_norm_time_mixed(n_disc, comp_budget, &stream(seed, "moments", "inv_norm"));
    let inv_c = Component { mean: inv.mean(), stderr: inv.stderr() };

    let m_max = *m_list.iter().max().unwrap_or(&1) as usize;
    let vk_root = stream(seed, "moments", "vk");
    let vk_components: Vec<Component> = (1..m_max as u64)
        .map(|j| {
            let (s, _) = brownian::vk_inverse_moment(j, comp_n_disc, comp_budget, &vk_root.split(j));
            Component { mean: s.mean(), stderr: s.stderr() }
        })
        .collect();

    let est_root = stream(seed, "moments", "estimate");
    let mut rows = Vec::new();
    let mut payload = Vec::new();
    for &m in &m_list {
        let m = m as u32;
        let mut est = moments::ks_local_time_moment(
            m,
            sigma,
            simplex_budget,
            path_budget,
            n_disc,
            &est_root.split(m as u64),
        )
        .map_err(|e| CliError::ConfigParse(format!("moments: {e}")))?;
        let sandwich = moments::moment_sandwich(m, sigma, inv_c, &vk_components)
            .map_err(|e| CliError::ConfigParse(format!("moments: {e}")))?;
        est.sandwich = Some(sandwich);
        rows.push(vec![
            m.to_string(),
            fmt(moments::simplex_closed_form(m)),
            fmt(est.value),
            fmt(est.stderr),
            fmt(sandwich.lower),
            fmt(sandwich.upper),
        ]);
        payload.push(serde_json::to_value(&est).expect("estimate serializes"));
    }

    let report = ExperimentReport::new(
        "moments",
        seed,
        cfg.to_json(),
        json!({
            "components": {
                "inv_norm": { "mean": inv_c.mean, "stderr": inv_c.stderr },
                "vk": vk_components
                    .iter()
                    .map(|c| json!({ "mean": c.mean, "stderr": c.stderr }))
                    .collect::<Vec<_>>(),
            },
            "estimates": payload,
        }),
    );

    Ok(Outcome {
        report,
        tables: vec![CsvTable {
            name: "moments".into(),
            header: vec!["m", "closed_form", "estimate", "stderr", "lower", "upper"],
            rows,
        }],
        raw_samples: None,
    })
}

/// Internal targets for the limit experiments: limit local-time moments via
/// the Gram-moment estimator, on streams disjoint from the empirics.
fn moment_targets(
    model: &ModelConfig,
    max_moment: usize,
    cfg: &Config,
    seed: u64,
    experiment: &str,
) -> Result<Vec<f64>, CliError> {
    let budget = cfg.get_u64("experiment", "target_budget", 20_000)?;
    let n_disc = cfg.get_u64("experiment", "target_n_disc", 1 << 12)?;
    let root = stream(seed, experiment, "moment_targets");
    (1..=max_moment)
        .map(|m| {
            moments::ks_local_time_moment(m as u32, model.sigma_xi(), budget, 1, n_disc, &root.split(m as u64))
                .map(|e| e.value)
                .map_err(|e| CliError::ConfigParse(format!("{experiment}: {e}")))
        })
        .collect()
}

pub fn run_lln(cfg: &Config, seed: u64) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let f = cfg.observable("f", &Observable::from_pairs(&[(0, 1.0), (1, 1.0)]))?;
    let n_list = cfg.get_list_u64("experiment", "n", &[1 << 10, 1 << 12, 1 << 14, 1 << 16])?;
    let reps = cfg.get_u64("experiment", "reps", 10_000)?;
    let max_moment = cfg.get_usize("experiment", "max_moment", 1)?;
    let targets = moment_targets(&model, max_moment, cfg, seed, "lln")?;
    let table = limits::lln_experiment(
        &model,
        &f,
        &n_list,
        reps,
        max_moment,
        &stream(seed, "lln", "empirics"),
        &targets,
    )
    .map_err(|e| CliError::ConfigParse(format!("lln: {e}")))?;

    let mut report = ExperimentReport::new(
        "lln",
        seed,
        cfg.to_json(),
        serde_json::to_value(&table).expect("table serializes"),
    );
    if let Some(tol) = cfg.get("experiment", "rel_tol") {
        let tol: f64 = tol
            .parse()
            .map_err(|_| CliError::ConfigParse("lln: bad rel_tol".into()))?;
        if let Some(last) = table.rows_for("moment_1").last() {
            let rel = (last.value - last.target).abs() / last.target.abs();
            report.criteria.push(CriterionLine {
                id: "lln_first_moment".into(),
                pass: rel <= tol,
                detail: format!("n={}: {} vs {} (rel {:.3})", last.n, last.value, last.target, rel),
            });
        }
    }
    Ok(Outcome {
        report,
        tables: vec![table_from_convergence("lln", &table)],
        raw_samples: None,
    })
}

pub fn run_clt(cfg: &Config, seed: u64) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let f = cfg.observable("f", &Observable::delta_diff(1))?;
    let n_list = cfg.get_list_u64("experiment", "n", &[1 << 12, 1 << 14, 1 << 16])?;
    let reps = cfg.get_u64("experiment", "reps", 10_000)?;
    let max_moment = cfg.get_usize("experiment", "max_moment", 3)?;
    let exact_horizon = cfg.get_i64("experiment", "exact_horizon", 4)?;
    let mc_horizon = cfg.get_i64("experiment", "mc_horizon", 40)?;
    let mc_budget = cfg.get_u64("experiment", "mc_budget", 100_000)?;

    let gk = green_kubo::sigma2_f(
        &model,
        &f,
        exact_horizon,
        mc_horizon,
        mc_budget,
        &stream(seed, "clt", "sigma2"),
        true,
    )
    .map_err(|e| CliError::ConfigParse(format!("clt: {e}")))?;

    let targets = moment_targets(&model, max_moment.div_ceil(2), cfg, seed, "clt")?;
    let table = limits::clt_experiment(
        &model,
        &f,
        &n_list,
        reps,
        max_moment,
        &stream(seed, "clt", "empirics"),
        gk.sigma2,
        &targets,
    )
    .map_err(|e| CliError::ConfigParse(format!("clt: {e}")))?;

    let report = ExperimentReport::new(
        "clt",
        seed,
        cfg.to_json(),
        json!({
            "sigma2_f": gk.sigma2,
            "sigma2_stderr": gk.sigma2_stderr,
            "table": serde_json::to_value(&table).expect("table serializes"),
        }),
    );
    Ok(Outcome {
        report,
        tables: vec![table_from_convergence("clt", &table)],
        raw_samples: None,
    })
}

pub fn run_local_limit(cfg: &Config, seed: u64) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let a_list = cfg.get_list_i64("experiment", "a", &[0])?;
    let n_list = cfg.get_list_u64("experiment", "n", &[1 << 10, 1 << 12, 1 << 14])?;
    let reps = cfg.get_u64("experiment", "reps", 1_000_000)?;
    let inv_budget = cfg.get_u64("experiment", "inv_budget", 10_000)?;
    let inv_n_disc = cfg.get_u64("experiment", "inv_n_disc", 1 << 14)?;

    let inv = SampleStats::from_slice(&brownian::l2_inverse_samples(
        inv_n_disc,
        inv_budget,
        &stream(seed, "local_limit", "inv_norm"),
    ));
    let inv_c = Component { mean: inv.mean(), stderr: inv.stderr() };
    let mut table = limits::local_limit_check(
        &model,
        &a_list,
        &n_list,
        reps,
        &stream(seed, "local_limit", "empirics"),
        inv_c,
    );

    if cfg.get_bool("experiment", "two_time", false)? {
        let n = *n_list.last().expect("n list nonempty");
        let det_budget = cfg.get_u64("experiment", "det_budget", 10_000)?;
        let (det, _) = brownian::gram_inv_sqrt_moment(
            &[0.5, 1.0],
            inv_n_disc,
            det_budget,
            &stream(seed, "local_limit", "det_target"),
        );
        table.rows.push(limits::local_limit_two_time(
            &model,
            n,
            0,
            0,
            reps,
            &stream(seed, "local_limit", "two_time"),
            Component { mean: det.mean(), stderr: det.stderr() },
        ));
    }

    let report = ExperimentReport::new(
        "local_limit",
        seed,
        cfg.to_json(),
        serde_json::to_value(&table).expect("table serializes"),
    );
    Ok(Outcome {
        report,
        tables: vec![table_from_convergence("local_limit", &table)],
        raw_samples: None,
    })
}

pub fn run_ratio(cfg: &Config, seed: u64) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let g = cfg.window_fn("g")?;
    let h = cfg.observable("h", &Observable::from_pairs(&[(0, 1.0), (1, 1.0)]))?;
    let n = cfg.get_u64("experiment", "n", 1 << 20)?;
    let paths = cfg.get_u64("experiment", "paths", 100)?;
    let default_cp: Vec<u64> = [n / 16, n / 4, n].into_iter().filter(|&c| c > 0).collect();
    let checkpoints = cfg.get_list_u64("experiment", "checkpoints", &default_cp)?;

    let out = limits::ratio_ergodic_experiment(
        &model,
        &g,
        &h,
        &checkpoints,
        paths,
        &stream(seed, "ratio", "paths"),
    );

    let mut report = ExperimentReport::new(
        "ratio",
        seed,
        cfg.to_json(),
        serde_json::to_value(&out).expect("outcome serializes"),
    );
    if let Some(tol) = cfg.get("experiment", "rel_tol") {
        let tol: f64 = tol
            .parse()
            .map_err(|_| CliError::ConfigParse("ratio: bad rel_tol".into()))?;
        if let Some(last) = out.table.rows.last() {
            let rel = (last.value - last.target).abs() / last.target.abs();
            report.criteria.push(CriterionLine {
                id: "ratio_median".into(),
                pass: rel <= tol,
                detail: format!("n={}: {} vs {} (rel {:.3})", last.n, last.value, last.target, rel),
            });
        }
    }
    Ok(Outcome {
        report,
        tables: vec![table_from_convergence("ratio", &out.table)],
        raw_samples: None,
    })
}

pub fn run_functional(cfg: &Config, seed: u64) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let n_list = cfg.get_list_u64("experiment", "n", &[1 << 10, 1 << 14, 1 << 16])?;
    let reps = cfg.get_u64("experiment", "reps", 10_000)?;
    let n_disc = cfg.get_u64("experiment", "n_disc", 1 << 14)?;

    let table = limits::functional_limit_check(
        &model,
        &n_list,
        reps,
        n_disc,
        &stream(seed, "functional", "empirics"),
    );

    let mut report = ExperimentReport::new(
        "functional",
        seed,
        cfg.to_json(),
        serde_json::to_value(&table).expect("table serializes"),
    );
    if cfg.get_bool("experiment", "trend_check", false)? {
        let ks: Vec<&limits::ConvRow> = table.rows_for("ks_distance");
        let decreasing = ks.windows(2).all(|w| w[1].value < w[0].value);
        report.criteria.push(CriterionLine {
            id: "ks_strictly_decreasing".into(),
            pass: decreasing,
            detail: format!(
                "ks: {}",
                ks.iter()
                    .map(|r| format!("{}@{}", r.value, r.n))
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
        });
    }
    Ok(Outcome {
        report,
        tables: vec![table_from_convergence("functional", &table)],
        raw_samples: None,
    })
}

/// A quick end-to-end sanity batch: one named statistic, one CSV row.
pub fn run_batch(cfg: &Config, seed: u64) -> Result<Outcome, CliError> {
    let model = cfg.model()?;
    let n = cfg.get_u64("experiment", "n", 1 << 10)?;
    let reps = cfg.get_u64("experiment", "reps", 10_000)?;
    let stat_name = cfg.get("experiment", "statistic").unwrap_or("local_time_zero_quarter");
    let f = cfg.observable("f", &Observable::delta(0))?;
    let statistic = Statistic::parse(stat_name, &f)
        .map_err(|e| CliError::ConfigParse(format!("batch: {e}")))?;
    let root = stream(seed, "batch", "mc");
    let stats = walk::batch_estimate(&model, n, reps, &statistic, &root)
        .map_err(|e| CliError::ConfigParse(format!("batch: {e}")))?;
    let raw_dump = cfg.get_bool("experiment", "raw_dump", false)?;
    let raw_samples = raw_dump.then(|| {
        rwrs_core::stats::par_collect(reps, |r| {
            let mut rng = root.split(r);
            statistic.sample(&model, n, &mut rng)
        })
    });
    let report = ExperimentReport::new(
        "batch",
        seed,
        cfg.to_json(),
        json!({
            "statistic": statistic.name(),
            "n": n,
            "reps": reps,
            "estimate": stats.mean(),
            "stderr": stats.stderr(),
        }),
    );
    Ok(Outcome {
        report,
        tables: vec![CsvTable {
            name: "batch".into(),
            header: vec!["statistic", "n", "reps", "estimate", "stderr", "seed"],
            rows: vec![vec![
                statistic.name(),
                n.to_string(),
                reps.to_string(),
                fmt(stats.mean()),
                fmt(stats.stderr()),
                seed.to_string(),
            ]],
        }],
        raw_samples,
    })
}
