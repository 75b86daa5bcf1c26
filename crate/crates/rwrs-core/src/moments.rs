//! Moments of the limit local time at zero: closed-form simplex integrals,
//! the Gram-determinant moment formula, sandwich bounds and Carleman
//! partial sums.
//!
//! The m-th moment factorizes as
//! `m! / (2 pi sigma_xi^2)^{m/2} * integral over ordered times of
//! E[det D_t^{-1/2}]`, and the time integrand carries a
//! `prod (t_{k+1} - t_k)^{-3/4}` boundary singularity. The sampler absorbs
//! it analytically with a Dirichlet(1/4, ..., 1/4, 1) proposal on the gaps,
//! whose density is exactly proportional to the singular factor.

use std::f64::consts::{PI, TAU};

use rand_distr::{Distribution, Gamma};
use serde::Serialize;
use thiserror::Error;

use crate::brownian::{gram_det, sample_local_time_grid};
use crate::rng::StreamRng;
use crate::stats::{par_batch_stats, SampleStats};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MomentsError {
    #[error("missing component estimates: need {need}, got {got}")]
    MissingComponents { need: usize, got: usize },
    #[error("budget must be positive")]
    ZeroBudget,
}

/// `Gamma(1/4)` to 20 significant digits.
pub const GAMMA_QUARTER: f64 = 3.625_609_908_221_908_311_9;

/// Lanczos approximation of `ln Gamma(x)` for `x > 0` (g = 7, 9 terms),
/// relative error below 1e-12 on the range used here.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + 7.5;
    0.5 * (TAU).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

pub fn gamma_fn(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// `Gamma(m/4 + 1)` by the recurrence `Gamma(x+1) = x Gamma(x)` from exact
/// quarter-integer base values, so small-m closed forms are bit-stable.
pub fn gamma_quarter_plus_one(m: u32) -> f64 {
    let r = m % 4;
    let base = match r {
        0 => 1.0,
        1 => GAMMA_QUARTER / 4.0,
        2 => PI.sqrt() / 2.0,
        // Gamma(7/4) = (3/4) Gamma(3/4), Gamma(3/4) = pi sqrt(2) / Gamma(1/4)
        _ => 0.75 * PI * std::f64::consts::SQRT_2 / GAMMA_QUARTER,
    };
    let q = (m - r) / 4;
    let mut acc = base;
    for j in 1..=q {
        acc *= r as f64 / 4.0 + j as f64;
    }
    acc
}

/// Closed form of the singular simplex integral:
/// `m! * integral_{0<t_1<...<t_m<1} prod (t_{k+1}-t_k)^{-3/4} dt
///  = m! * Gamma(1/4)^m / Gamma(m/4 + 1)`.
pub fn simplex_closed_form(m: u32) -> f64 {
    if m > 100 {
        return (ln_gamma(m as f64 + 1.0) + m as f64 * GAMMA_QUARTER.ln()
            - ln_gamma(m as f64 / 4.0 + 1.0))
        .exp();
    }
    let mut factorial = 1.0f64;
    for j in 2..=m as u64 {
        factorial *= j as f64;
    }
    factorial * GAMMA_QUARTER.powi(m as i32) / gamma_quarter_plus_one(m)
}

/// Draw simplex gaps `(x_1, ..., x_{m+1})` from Dirichlet(alpha, ..., alpha, 1).
pub fn dirichlet_gaps(m: u32, alpha: f64, rng: &mut StreamRng) -> Vec<f64> {
    let gamma_a = Gamma::new(alpha, 1.0).expect("alpha > 0");
    let gamma_1 = Gamma::new(1.0, 1.0).unwrap();
    let mut g: Vec<f64> = (0..m)
        .map(|_| f64::max(gamma_a.sample(rng), f64::MIN_POSITIVE))
        .collect();
    g.push(f64::max(gamma_1.sample(rng), f64::MIN_POSITIVE));
    let total: f64 = g.iter().sum();
    for x in &mut g {
        *x /= total;
    }
    g
}

/// Monte Carlo check of the simplex closed form with a Dirichlet(3/8)
/// importance proposal. The weight `const * prod x_k^{-1/8}` is genuinely
/// random (a Dirichlet(1/4) proposal would absorb the integrand exactly and
/// make the check vacuous) yet has finite variance.
pub fn simplex_mc(m: u32, budget: u64, root: &StreamRng) -> SampleStats {
    assert!(m >= 1);
    let beta = 0.375;
    let ln_const = ln_gamma(m as f64 + 1.0) + m as f64 * ln_gamma(beta)
        - ln_gamma(m as f64 * beta + 1.0);
    par_batch_stats(budget, |r| {
        let mut rng = root.split(r);
        let gaps = dirichlet_gaps(m, beta, &mut rng);
        let ln_w: f64 = gaps[..m as usize]
            .iter()
            .map(|&x| (0.25 - beta) * x.ln())
            .sum();
        (ln_const + ln_w).exp()
    })
}

/// Monte Carlo estimate of a limit local-time moment.
#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub m: u32,
    pub value: f64,
    pub stderr: f64,
    /// Closed-form simplex factor entering the estimate.
    pub simplex_factor: f64,
    /// Estimated normalized det-moment factor (mean importance weight).
    pub det_moment: f64,
    pub det_moment_stderr: f64,
    pub sigma_xi: f64,
    /// Samples discarded because the time draw collapsed on the grid.
    pub degenerate: u64,
    pub sandwich: Option<SandwichBounds>,
}

/// Estimate `E[(local time at 0)^m]` of the limit process.
///
/// Ordered time m-tuples come from the Dirichlet(1/4,...,1/4,1) proposal;
/// for each accepted tuple the Gram determinant of local-time profiles at
/// those times is averaged over `path_budget` walk paths. Sampled gaps are
/// clamped to at least one grid step so the Gram matrix stays nonsingular;
/// draws that cannot fit on the grid are counted as degenerate.
pub fn ks_local_time_moment(
    m: u32,
    sigma_xi: f64,
    simplex_budget: u64,
    path_budget: u64,
    n_disc: u64,
    root: &StreamRng,
) -> Result<MomentEstimate, MomentsError> {
    if simplex_budget == 0 || path_budget == 0 {
        return Err(MomentsError::ZeroBudget);
    }
    assert!(m >= 1 && (m as u64) < n_disc);
    let n = n_disc as f64;

    #[derive(Clone, Copy)]
    struct Draw {
        weight: f64,
        degenerate: bool,
    }
    let draws: Vec<Draw> = crate::stats::par_collect(simplex_budget, |r| {
        let mut rng = root.split(r);
        let gaps = dirichlet_gaps(m, 0.25, &mut rng);
        // cumulative times on the grid, clamped to strictly increase
        let mut times = Vec::with_capacity(m as usize);
        let mut realized = Vec::with_capacity(m as usize);
        let mut t_acc = 0.0;
        let mut prev = 0u64;
        let mut ok = true;
        for &x in &gaps[..m as usize] {
            t_acc += x;
            let u = ((t_acc * n).floor() as u64).max(prev + 1);
            if u > n_disc {
                ok = false;
                break;
            }
            times.push(u as f64 / n);
            realized.push((u - prev) as f64 / n);
            prev = u;
        }
        if !ok {
            return f64::NAN; // marked degenerate below
        }
        // the singular factor is evaluated at the realized grid gaps: the
        // proposal assigns each grid cell exactly the continuum mass of the
        // singular density over it, so this is a Riemann sum of the time
        // integral
        let sing: f64 = realized.iter().map(|&x| x.powf(0.75)).product();
        let mut acc = 0.0;
        let mut used = 0u64;
        for p in 0..path_budget {
            let mut prng = rng.split(p);
            let grids = sample_local_time_grid(n_disc, &times, &mut prng);
            let gram = gram_det(&grids).expect("one path, one spacing");
            if gram.det > 0.0 {
                acc += gram.det.powf(-0.5);
                used += 1;
            }
        }
        if used == 0 {
            return f64::NAN;
        }
        (acc / used as f64) * sing
    })
    .into_iter()
    .map(|w| Draw { weight: w, degenerate: w.is_nan() })
    .collect();

    let degenerate = draws.iter().filter(|d| d.degenerate).count() as u64;
    let weights: Vec<f64> = draws
        .iter()
        .map(|d| if d.degenerate { 0.0 } else { d.weight })
        .collect();
    let w_stats = SampleStats::from_slice(&weights);

    let gamma_factor = GAMMA_QUARTER.powi(m as i32) / gamma_quarter_plus_one(m);
    let mut m_fact = 1.0f64;
    for j in 2..=m as u64 {
        m_fact *= j as f64;
    }
    let scale = m_fact * gamma_factor / (TAU * sigma_xi * sigma_xi).powf(m as f64 / 2.0);
    Ok(MomentEstimate {
        m,
        value: scale * w_stats.mean(),
        stderr: scale * w_stats.stderr(),
        simplex_factor: simplex_closed_form(m),
        det_moment: w_stats.mean(),
        det_moment_stderr: w_stats.stderr(),
        sigma_xi,
        degenerate,
        sandwich: None,
    })
}

/// `E[|L_1|^{-1}]` estimated under the same time-resolution mixture the
/// moment estimator induces: each draw picks a time fraction from the
/// Beta(1/4, 1) gap law and samples the inverse norm at that realized grid
/// resolution. Sandwich bounds built from this component compare with the
/// moment estimate at matched discretization, so the degenerate m = 1
/// sandwich (lower = upper) differs from the estimate by statistics only.
pub fn inv_norm_time_mixed(n_disc: u64, budget: u64, root: &StreamRng) -> SampleStats {
    let n = n_disc as f64;
    let samples = crate::stats::par_collect(budget, |r| {
        let mut rng = root.split(r);
        let x = dirichlet_gaps(1, 0.25, &mut rng)[0];
        let u = ((x * n).floor() as u64).clamp(1, n_disc);
        let grid = sample_local_time_grid(u, &[1.0], &mut rng).pop().unwrap();
        grid.l2_norm_sq().powf(-0.5)
    });
    SampleStats::from_slice(&samples)
}

/// A component estimate: mean and standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Component {
    pub mean: f64,
    pub stderr: f64,
}

/// Lower/upper bounds on the m-th moment built from inverse-norm and
/// inverse-distance component estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichBounds {
    pub m: u32,
    pub lower: f64,
    pub lower_stderr: f64,
    pub upper: f64,
    pub upper_stderr: f64,
    /// The upper bound substitutes the explicit indicator subspaces for the
    /// sup over all subspaces, so it is a proxy, not a certified bound.
    pub upper_is_proxy: bool,
}

/// Sandwich for the m-th moment:
/// lower `= (E[|L_1|^{-1}])^m * closed_form / (2 pi sigma^2)^{m/2}`,
/// upper analogous with `prod_j E[d(L_1, V_j)^{-1}]`, `j = 0..m-1`
/// (`V_0 = {0}` collapses to the inverse norm).
pub fn moment_sandwich(
    m: u32,
    sigma_xi: f64,
    inv_norm: Component,
    vk_components: &[Component],
) -> Result<SandwichBounds, MomentsError> {
    assert!(m >= 1);
    if vk_components.len() < (m - 1) as usize {
        return Err(MomentsError::MissingComponents {
            need: (m - 1) as usize,
            got: vk_components.len(),
        });
    }
    let scale = simplex_closed_form(m) / (TAU * sigma_xi * sigma_xi).powf(m as f64 / 2.0);
    let lower = scale * inv_norm.mean.powi(m as i32);
    let lower_stderr =
        scale * m as f64 * inv_norm.mean.powi(m as i32 - 1) * inv_norm.stderr;

    let mut upper = scale;
    let mut rel_var = 0.0;
    for j in 0..m as usize {
        let c = if j == 0 { inv_norm } else { vk_components[j - 1] };
        upper *= c.mean;
        rel_var += (c.stderr / c.mean).powi(2);
    }
    Ok(SandwichBounds {
        m,
        lower,
        lower_stderr,
        upper,
        upper_stderr: upper * rel_var.sqrt(),
        upper_is_proxy: true,
    })
}

/// Partial sums of the Carleman series `sum_m value(m)^{-1/(2m)}` (values
/// indexed from m = 1).
pub fn carleman_partial(values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let m = (i + 1) as f64;
            acc += v.powf(-1.0 / (2.0 * m));
            acc
        })
        .collect()
}

/// Companion series partial sums `sum_m m^{-5/8 - eta0}`.
pub fn carleman_companion(terms: usize, eta0: f64) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=terms)
        .map(|m| {
            acc += (m as f64).powf(-0.625 - eta0);
            acc
        })
        .collect()
}

/// Log of the moment upper-bound values
/// `a^m (m!)^{3/2+eta0} / Gamma(m/4+1)` for m = 1..=count; the values
/// themselves overflow doubles past m ~ 115.
pub fn moment_upper_bound_ln_values(count: usize, a_frak: f64, eta0: f64) -> Vec<f64> {
    (1..=count)
        .map(|m| {
            let mf = m as f64;
            mf * a_frak.ln() + (1.5 + eta0) * ln_gamma(mf + 1.0) - ln_gamma(mf / 4.0 + 1.0)
        })
        .collect()
}

pub fn moment_upper_bound_values(count: usize, a_frak: f64, eta0: f64) -> Vec<f64> {
    moment_upper_bound_ln_values(count, a_frak, eta0)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Carleman partial sums from log-values, safe for huge bound values.
pub fn carleman_partial_from_ln(ln_values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    ln_values
        .iter()
        .enumerate()
        .map(|(i, &lv)| {
            let m = (i + 1) as f64;
            acc += (-lv / (2.0 * m)).exp();
            acc
        })
        .collect()
}
