//! The limiting variance of centered additive functionals, summed the only
//! way it converges absolutely: in d-blocks of consecutive lags.
//!
//! The series over single lags `sum_l term(|l|)` with
//! `term(L) = sum_{a,b} f(a) f(b) P(Z_L = a - b)` is not absolutely
//! convergent when `d > 1` (single-lag terms decay like `L^{-3/4}` with
//! alternating congruence pattern); grouping lags `l' + d k`, `l' = 0..d-1`
//! into one block per `k` makes the block sequence absolutely summable.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::lattice::ModelConfig;
use crate::observable::Observable;
use crate::oracle::{ExactOracle, OracleError};
use crate::rng::StreamRng;
use crate::stats::par_batch_stats;
use crate::walk::endpoint;

#[derive(Debug, Error, PartialEq)]
pub enum GreenKuboError {
    #[error("observable is not centered: sum f = {0}")]
    ObservableNotCentered(f64),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BlockSource {
    Exact,
    MonteCarlo,
}

/// One d-block of the variance series.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BlockRow {
    pub k: i64,
    pub value: f64,
    pub source: BlockSource,
    pub stderr: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct GreenKuboResult {
    pub sigma2: f64,
    pub sigma2_stderr: f64,
    pub blocks: Vec<BlockRow>,
    pub truncation_index: i64,
    /// Fitted power-law estimate of the truncated mass beyond the horizon.
    pub tail_estimate: f64,
}

/// Collapse `f` to coefficients on support differences:
/// `coeff(v) = sum_{a-b=v} f(a) f(b)`.
fn diff_coefficients(f: &Observable) -> Vec<(i64, f64)> {
    let mut map: BTreeMap<i64, f64> = BTreeMap::new();
    for &(a, fa) in f.pairs() {
        for &(b, fb) in f.pairs() {
            *map.entry(a - b).or_insert(0.0) += fa * fb;
        }
    }
    map.into_iter().filter(|&(_, c)| c != 0.0).collect()
}

/// Value (and stderr when Monte Carlo) of one lag term
/// `sum_{a,b} f(a) f(b) P(Z_lag = a - b)`.
#[derive(Debug, Clone, Copy)]
struct LagTerm {
    value: f64,
    stderr: f64,
    exact: bool,
}

struct LagCache<'a> {
    model: &'a ModelConfig,
    coeffs: Vec<(i64, f64)>,
    oracle: ExactOracle,
    exact_max_lag: u64,
    mc_budget: u64,
    root: StreamRng,
    cache: BTreeMap<u64, LagTerm>,
}

impl<'a> LagCache<'a> {
    fn term(&mut self, lag: u64) -> Result<LagTerm, OracleError> {
        if let Some(t) = self.cache.get(&lag) {
            return Ok(*t);
        }
        let t = if lag <= self.exact_max_lag && lag <= self.oracle.cap {
            let pmf = self.oracle.z_pmf(self.model, lag)?;
            let value = self
                .coeffs
                .iter()
                .map(|&(v, c)| c * pmf.prob_f64(v))
                .sum();
            LagTerm { value, stderr: 0.0, exact: true }
        } else {
            // one sample set estimates all needed differences at this lag
            let root = self.root.split(lag);
            let coeffs = &self.coeffs;
            let model = self.model;
            let stats = par_batch_stats(self.mc_budget, |r| {
                let mut rng = root.split(r);
                let z = endpoint(model, lag, &mut rng);
                coeffs
                    .iter()
                    .find(|&&(v, _)| v == z)
                    .map(|&(_, c)| c)
                    .unwrap_or(0.0)
            });
            LagTerm {
                value: stats.mean(),
                stderr: stats.stderr(),
                exact: false,
            }
        };
        self.cache.insert(lag, t);
        Ok(t)
    }
}

/// The lags grouped into block `k`: `|l' + d k|` for `l' = 0..d-1`.
pub fn block_lags(d: i64, k: i64) -> Vec<u64> {
    (0..d).map(|lp| (lp + d * k).unsigned_abs()).collect()
}

/// One block of the series. Exact (from the enumeration oracle) whenever all
/// its lags are at most `exact_max_lag`; otherwise the Monte Carlo lags carry
/// a stderr that is combined into the block's.
pub fn block_term(
    model: &ModelConfig,
    f: &Observable,
    k: i64,
    exact_max_lag: u64,
    mc_budget: u64,
    root: &StreamRng,
) -> Result<BlockRow, GreenKuboError> {
    let mut cache = LagCache {
        model,
        coeffs: diff_coefficients(f),
        oracle: ExactOracle::default(),
        exact_max_lag,
        mc_budget,
        root: root.clone(),
        cache: BTreeMap::new(),
    };
    block_from_cache(model, k, &mut cache)
}

fn block_from_cache(
    model: &ModelConfig,
    k: i64,
    cache: &mut LagCache,
) -> Result<BlockRow, GreenKuboError> {
    let d = model.periodicity.d;
    let mut value = 0.0;
    let mut var = 0.0;
    let mut exact = true;
    for lag in block_lags(d, k) {
        let t = cache.term(lag)?;
        value += t.value;
        var += t.stderr * t.stderr;
        exact &= t.exact;
    }
    Ok(BlockRow {
        k,
        value,
        source: if exact { BlockSource::Exact } else { BlockSource::MonteCarlo },
        stderr: var.sqrt(),
    })
}

/// Sum the variance series over blocks `|k| <= mc_horizon` in ascending
/// `|k|`, using exact lag terms up to `exact_horizon` blocks, and fit a
/// power-law tail to the far blocks.
///
/// `enforce_centered = false` turns the centering error into a warning-free
/// pass-through for exploratory use; the series for non-centered `f`
/// diverges, which is exactly why the default rejects it.
#[allow(clippy::too_many_arguments)]
pub fn sigma2_f(
    model: &ModelConfig,
    f: &Observable,
    exact_horizon: i64,
    mc_horizon: i64,
    mc_budget: u64,
    root: &StreamRng,
    enforce_centered: bool,
) -> Result<GreenKuboResult, GreenKuboError> {
    if enforce_centered && !f.is_centered() {
        return Err(GreenKuboError::ObservableNotCentered(f.total()));
    }
    assert!(mc_horizon >= exact_horizon && exact_horizon >= 0);
    let d = model.periodicity.d;
    let oracle = ExactOracle::default();
    let exact_max_lag = ((exact_horizon + 1) * d).min(oracle.cap as i64) as u64;
    let mut cache = LagCache {
        model,
        coeffs: diff_coefficients(f),
        oracle,
        exact_max_lag,
        mc_budget,
        root: root.clone(),
        cache: BTreeMap::new(),
    };

    // ascending |k|: 0, -1, +1, -2, +2, ...
    let mut order: Vec<i64> = vec![0];
    for a in 1..=mc_horizon {
        order.push(-a);
        order.push(a);
    }

    let mut blocks = Vec::with_capacity(order.len());
    let mut sigma2 = 0.0;
    for k in order {
        let b = block_from_cache(model, k, &mut cache)?;
        sigma2 += b.value;
        blocks.push(b);
    }

    // stderr of the total: each lag enters the sum a known number of times
    let mut multiplicity: BTreeMap<u64, f64> = BTreeMap::new();
    for b in &blocks {
        for lag in block_lags(d, b.k) {
            *multiplicity.entry(lag).or_insert(0.0) += 1.0;
        }
    }
    let mut total_var = 0.0;
    for (lag, m) in &multiplicity {
        let t = cache.term(*lag)?;
        total_var += (m * t.stderr) * (m * t.stderr);
    }

    let (truncation_index, tail_estimate) = fit_tail(&blocks, mc_horizon);
    Ok(GreenKuboResult {
        sigma2,
        sigma2_stderr: total_var.sqrt(),
        blocks,
        truncation_index,
        tail_estimate,
    })
}

/// Convenience wrapper for `f = delta_0 - delta_a`.
#[allow(clippy::too_many_arguments)]
pub fn sigma2_0a(
    model: &ModelConfig,
    a: i64,
    exact_horizon: i64,
    mc_horizon: i64,
    mc_budget: u64,
    root: &StreamRng,
) -> Result<GreenKuboResult, GreenKuboError> {
    sigma2_f(
        model,
        &Observable::delta_diff(a),
        exact_horizon,
        mc_horizon,
        mc_budget,
        root,
        true,
    )
}

/// Fit `|block(k)| ~ c * |k|^{-p}` over the far half of the computed blocks
/// and report the implied mass beyond the horizon (both signs).
fn fit_tail(blocks: &[BlockRow], horizon: i64) -> (i64, f64) {
    let lo = (horizon / 2).max(2);
    let pts: Vec<(f64, f64)> = blocks
        .iter()
        .filter(|b| b.k.abs() >= lo && b.value.abs() > 0.0)
        .map(|b| ((b.k.abs() as f64).ln(), b.value.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return (horizon, f64::NAN);
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (slope, intercept) = crate::stats::linear_fit(&xs, &ys);
    let p = -slope;
    if p <= 1.0 {
        return (horizon, f64::NAN);
    }
    let c = intercept.exp();
    // sum_{k > K} k^{-p} ~ K^{1-p} / (p - 1), both signs
    let tail = 2.0 * c * (horizon as f64).powf(1.0 - p) / (p - 1.0);
    (horizon, tail)
}
