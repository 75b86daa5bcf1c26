//! Desk-scale realizations of the limit theorems: LLN and CLT moment
//! convergence, the local-limit plateau, the ratio ergodic theorem and the
//! functional-limit distribution check.
//!
//! Every row pairs an empirical value (with stderr and replicate count)
//! against a theoretical target whose provenance names the producing module.
//! Targets are never computed from the random streams that produced the
//! empirics.

use serde::Serialize;
use thiserror::Error;

use crate::lattice::ModelConfig;
use crate::moments::Component;
use crate::observable::Observable;
use crate::rng::StreamRng;
use crate::stats::{self, ks_statistic, median, par_batch_stats, par_batch_stats_multi, par_collect};
use crate::walk::{self, ratio_path, window_observable_integral, WindowFn};

#[derive(Debug, Error, PartialEq)]
pub enum LimitsError {
    #[error("observable is not centered: sum f = {0}")]
    ObservableNotCentered(f64),
    #[error("need moment targets up to order {need}, got {got}")]
    MissingTargets { need: usize, got: usize },
}

/// One (n, statistic) row of a convergence experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ConvRow {
    pub n: u64,
    pub statistic: String,
    pub value: f64,
    pub stderr: f64,
    pub reps: u64,
    pub target: f64,
    pub target_provenance: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub experiment: String,
    pub rows: Vec<ConvRow>,
}

impl ConvergenceTable {
    pub fn csv_header() -> Vec<&'static str> {
        vec!["n", "statistic", "value", "stderr", "reps", "target", "target_provenance"]
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.statistic.clone(),
                    r.value.to_string(),
                    r.stderr.to_string(),
                    r.reps.to_string(),
                    r.target.to_string(),
                    r.target_provenance.clone(),
                ]
            })
            .collect()
    }

    pub fn rows_for(&self, statistic: &str) -> Vec<&ConvRow> {
        self.rows.iter().filter(|r| r.statistic == statistic).collect()
    }
}

/// Empirical moments of `n^{-1/4} sum_{k<n} f(Z_k)` against the limit
/// targets `(sum f)^j sigma_xi^{-j} E[(local time)^j]`.
///
/// `moment_targets[j-1]` must hold an estimate of the j-th limit local-time
/// moment, computed from streams disjoint from `root`.
pub fn lln_experiment(
    model: &ModelConfig,
    f: &Observable,
    n_list: &[u64],
    reps: u64,
    max_moment: usize,
    root: &StreamRng,
    moment_targets: &[f64],
) -> Result<ConvergenceTable, LimitsError> {
    if moment_targets.len() < max_moment {
        return Err(LimitsError::MissingTargets {
            need: max_moment,
            got: moment_targets.len(),
        });
    }
    let sum_f = f.total();
    let sigma = model.sigma_xi();
    let mut rows = Vec::new();
    for (ni, &n) in n_list.iter().enumerate() {
        let stream = root.split(ni as u64);
        let stats = par_batch_stats_multi(reps, max_moment, |r, out| {
            let mut rng = stream.split(r);
            let x = walk::additive_sum(model, n, f, &mut rng) * (n as f64).powf(-0.25);
            let mut p = 1.0;
            for slot in out.iter_mut() {
                p *= x;
                *slot = p;
            }
        });
        for (j, s) in stats.iter().enumerate() {
            let order = j + 1;
            let target = sum_f.powi(order as i32) * sigma.powi(-(order as i32))
                * moment_targets[j];
            rows.push(ConvRow {
                n,
                statistic: format!("moment_{order}"),
                value: s.mean(),
                stderr: s.stderr(),
                reps,
                target,
                target_provenance: "moments::ks_local_time_moment".into(),
            });
        }
    }
    Ok(ConvergenceTable {
        experiment: "lln".into(),
        rows,
    })
}

/// Empirical moments of `n^{-1/8} sum_{k<n} f(Z_k)` for centered `f`.
/// Odd-moment targets vanish; the even target of order `2N` is
/// `(2N)!/(N! 2^N) * (sigma_f^2 / sigma_xi)^N * E[(local time)^N]`.
#[allow(clippy::too_many_arguments)]
pub fn clt_experiment(
    model: &ModelConfig,
    f: &Observable,
    n_list: &[u64],
    reps: u64,
    max_moment: usize,
    root: &StreamRng,
    sigma2_f: f64,
    moment_targets: &[f64],
) -> Result<ConvergenceTable, LimitsError> {
    if !f.is_centered() {
        return Err(LimitsError::ObservableNotCentered(f.total()));
    }
    if moment_targets.len() < max_moment / 2 {
        return Err(LimitsError::MissingTargets {
            need: max_moment / 2,
            got: moment_targets.len(),
        });
    }
    let sigma = model.sigma_xi();
    let mut rows = Vec::new();
    for (ni, &n) in n_list.iter().enumerate() {
        let stream = root.split(ni as u64);
        let stats = par_batch_stats_multi(reps, max_moment, |r, out| {
            let mut rng = stream.split(r);
            let x = walk::additive_sum(model, n, f, &mut rng) * (n as f64).powf(-0.125);
            let mut p = 1.0;
            for slot in out.iter_mut() {
                p *= x;
                *slot = p;
            }
        });
        for (j, s) in stats.iter().enumerate() {
            let order = j + 1;
            let (target, provenance) = if order % 2 == 1 {
                (0.0, "odd moments vanish in the limit".to_string())
            } else {
                let big_n = order / 2;
                let gauss_moment = double_factorial_odd(big_n);
                (
                    gauss_moment * (sigma2_f / sigma).powi(big_n as i32)
                        * moment_targets[big_n - 1],
                    "green_kubo::sigma2_f x moments::ks_local_time_moment".to_string(),
                )
            };
            rows.push(ConvRow {
                n,
                statistic: format!("moment_{order}"),
                value: s.mean(),
                stderr: s.stderr(),
                reps,
                target,
                target_provenance: provenance,
            });
        }
    }
    Ok(ConvergenceTable {
        experiment: "clt".into(),
        rows,
    })
}

/// `(2N-1)!! = (2N)! / (N! 2^N)`, the standard Gaussian even moment.
fn double_factorial_odd(big_n: usize) -> f64 {
    let mut acc = 1.0;
    let mut k = 2 * big_n as i64 - 1;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// Scaled point probabilities `n^{3/4} P(Z_n = a)` against the local-limit
/// target `d * E[|L_1|^{-1}] / (sqrt(2 pi) sigma_xi)`. Rows in the wrong
/// congruence class carry target 0 and must estimate exactly zero.
pub fn local_limit_check(
    model: &ModelConfig,
    a_list: &[i64],
    n_list: &[u64],
    reps: u64,
    root: &StreamRng,
    inv_norm: Component,
) -> ConvergenceTable {
    let d = model.periodicity.d as f64;
    let sigma = model.sigma_xi();
    let target = d * inv_norm.mean / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
    let mut rows = Vec::new();
    for (ni, &n) in n_list.iter().enumerate() {
        for (ai, &a) in a_list.iter().enumerate() {
            let admissible = model.periodicity.admits(n, a);
            let stream = root.split((ni * a_list.len() + ai) as u64);
            let scale = (n as f64).powf(0.75);
            let s = par_batch_stats(reps, |r| {
                let mut rng = stream.split(r);
                if walk::endpoint(model, n, &mut rng) == a {
                    scale
                } else {
                    0.0
                }
            });
            rows.push(ConvRow {
                n,
                statistic: format!("scaled_point_prob_at_{a}"),
                value: s.mean(),
                stderr: s.stderr(),
                reps,
                target: if admissible { target } else { 0.0 },
                target_provenance: if admissible {
                    "brownian::l2_inverse_moment".into()
                } else {
                    "congruence: exact zero".into()
                },
            });
        }
    }
    ConvergenceTable {
        experiment: "local_limit".into(),
        rows,
    }
}

/// Two-time joint version: `n^{3/2} P(Z_{n/2} = a1, Z_n = a2)` against
/// `(d / (sqrt(2 pi) sigma))^2 * E[det D_{1/2,1}^{-1/2}]`.
pub fn local_limit_two_time(
    model: &ModelConfig,
    n: u64,
    a1: i64,
    a2: i64,
    reps: u64,
    root: &StreamRng,
    det_inv_sqrt: Component,
) -> ConvRow {
    let d = model.periodicity.d as f64;
    let sigma = model.sigma_xi();
    let half = n / 2;
    let scale = (n as f64).powf(1.5);
    let s = par_batch_stats(reps, |r| {
        let mut rng = root.split(r);
        let mut z_half = 0i64;
        let mut z_final = 0i64;
        walk::fold_trajectory(model, n, &mut rng, |k, z| {
            if k == half {
                z_half = z;
            }
            z_final = z;
        });
        if z_half == a1 && z_final == a2 {
            scale
        } else {
            0.0
        }
    });
    let admissible = model.periodicity.admits(half, a1) && model.periodicity.admits(n, a2);
    let c = d / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
    ConvRow {
        n,
        statistic: format!("scaled_joint_prob_at_{a1}_{a2}"),
        value: s.mean(),
        stderr: s.stderr(),
        reps,
        target: if admissible { c * c * det_inv_sqrt.mean } else { 0.0 },
        target_provenance: if admissible {
            "brownian::gram_inv_sqrt_moment".into()
        } else {
            "congruence: exact zero".into()
        },
    }
}

/// Outcome of the ratio ergodic experiment: per-checkpoint medians plus the
/// count of undefined (zero-denominator) path ratios.
#[derive(Debug, Clone, Serialize)]
pub struct RatioOutcome {
    pub table: ConvergenceTable,
    pub undefined: u64,
}

/// Per-path ratios of the windowed Birkhoff sum against visits to level 0,
/// summarized by the median over paths at each checkpoint.
pub fn ratio_ergodic_experiment(
    model: &ModelConfig,
    g: &WindowFn,
    h: &Observable,
    checkpoints: &[u64],
    paths: u64,
    root: &StreamRng,
) -> RatioOutcome {
    let target = window_observable_integral(model, g, h);
    let per_path: Vec<Vec<Option<f64>>> = (0..paths)
        .map(|p| {
            let mut rng = root.split(p);
            ratio_path(model, g, h, checkpoints, &mut rng)
        })
        .collect();
    let mut undefined = 0u64;
    let mut rows = Vec::new();
    for (ci, &cp) in checkpoints.iter().enumerate() {
        let defined: Vec<f64> = per_path
            .iter()
            .filter_map(|path| path[ci])
            .collect();
        undefined += (per_path.len() - defined.len()) as u64;
        let med = median(&defined);
        // spread of the median via the normalized absolute deviation
        let mad = median(&defined.iter().map(|x| (x - med).abs()).collect::<Vec<_>>());
        rows.push(ConvRow {
            n: cp,
            statistic: "ratio_median".into(),
            value: med,
            stderr: 1.4826 * mad / (defined.len().max(1) as f64).sqrt(),
            reps: defined.len() as u64,
            target,
            target_provenance: "counting-measure integral of the observable".into(),
        });
    }
    RatioOutcome {
        table: ConvergenceTable {
            experiment: "ratio_ergodic".into(),
            rows,
        },
        undefined,
    }
}

/// Kolmogorov–Smirnov distance between the scaled RWRS endpoint
/// `n^{-3/4} Z_n / sigma_xi` and the simulated limit endpoint, for each `n`,
/// plus a median-symmetry row per `n`.
pub fn functional_limit_check(
    model: &ModelConfig,
    n_list: &[u64],
    reps: u64,
    n_disc: u64,
    root: &StreamRng,
) -> ConvergenceTable {
    let sigma = model.sigma_xi();
    let limit_samples =
        crate::brownian::delta_endpoint_samples(n_disc, reps, &root.split(u64::MAX));
    let mut rows = Vec::new();
    for (ni, &n) in n_list.iter().enumerate() {
        let stream = root.split(ni as u64);
        let scale = (n as f64).powf(-0.75) / sigma;
        let samples = par_collect(reps, |r| {
            let mut rng = stream.split(r);
            walk::endpoint(model, n, &mut rng) as f64 * scale
        });
        let ks = ks_statistic(&samples, &limit_samples);
        let na = samples.len() as f64;
        let nb = limit_samples.len() as f64;
        rows.push(ConvRow {
            n,
            statistic: "ks_distance".into(),
            value: ks,
            stderr: 0.5 * (1.0 / na + 1.0 / nb).sqrt(),
            reps,
            target: 0.0,
            target_provenance: "distributional limit: KS decreasing to 0".into(),
        });
        let s = stats::SampleStats::from_slice(&samples);
        rows.push(ConvRow {
            n,
            statistic: "endpoint_median".into(),
            value: median(&samples),
            stderr: 1.2533 * s.variance().sqrt() / na.sqrt(),
            reps,
            target: 0.0,
            target_provenance: "symmetry of the model".into(),
        });
    }
    ConvergenceTable {
        experiment: "functional_limit".into(),
        rows,
    }
}
