//! Discretized Brownian local-time profiles and the functionals built on
//! them: Gram matrices/determinants, inverse-norm and inverse-distance
//! moments, and the endpoint of the self-similar limit process.
//!
//! The local time `L_t(x)` is approximated by simple-walk site counts,
//! `L_t(x) ~ n^{-1/2} N_{floor(tn)}(floor(x sqrt(n)))` on a grid of spacing
//! `n^{-1/2}`. Profiles taken at several times come from one walk path, so
//! joint functionals (Gram matrices) are sampled consistently.

use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{spd_determinant, spd_solve, SymMatrix};
use crate::rng::{BitPool, StreamRng};
use crate::stats::{par_collect, SampleStats};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BrownianError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

/// A scaled site-occupation profile of the approximating walk.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeGrid {
    pub n_disc: u64,
    /// Grid spacing `n_disc^{-1/2}`.
    pub spacing: f64,
    /// Realized time fraction `floor(t * n_disc) / n_disc`.
    pub time_fraction: f64,
    min_site: i64,
    values: Vec<f64>,
}

impl LocalTimeGrid {
    pub fn sites(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.min_site + i as i64, v))
    }

    pub fn value_at(&self, site: i64) -> f64 {
        let idx = site - self.min_site;
        if idx < 0 || idx >= self.values.len() as i64 {
            0.0
        } else {
            self.values[idx as usize]
        }
    }

    pub fn min_site(&self) -> i64 {
        self.min_site
    }

    pub fn site_count(&self) -> usize {
        self.values.len()
    }

    /// `sum_site value * spacing`; equals the realized time fraction exactly
    /// up to float summation of integers scaled by a power of the spacing.
    pub fn occupation(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing
    }

    /// `|L|^2 = sum_site value^2 * spacing`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.spacing
    }

    pub fn inner(&self, other: &LocalTimeGrid) -> Result<f64, BrownianError> {
        if self.spacing != other.spacing {
            return Err(BrownianError::DegenerateInput(
                "mismatched grid spacing".into(),
            ));
        }
        let lo = self.min_site.max(other.min_site);
        let hi = (self.min_site + self.values.len() as i64)
            .min(other.min_site + other.values.len() as i64);
        let mut s = 0.0;
        for site in lo..hi {
            s += self.value_at(site) * other.value_at(site);
        }
        Ok(s * self.spacing)
    }
}

/// Simulate one simple-walk path and return the scaled occupation profiles
/// at each requested time fraction (ascending, in (0, 1]).
pub fn sample_local_time_grid(
    n_disc: u64,
    times: &[f64],
    rng: &mut StreamRng,
) -> Vec<LocalTimeGrid> {
    assert!(n_disc >= 1);
    assert!(
        times.windows(2).all(|w| w[0] < w[1])
            && times.iter().all(|&t| t > 0.0 && t <= 1.0),
        "times must be ascending in (0, 1]"
    );
    let spacing = (n_disc as f64).powf(-0.5);
    let milestones: Vec<u64> = times.iter().map(|&t| (t * n_disc as f64).floor() as u64).collect();

    let mut span = (4.0 * (n_disc as f64).sqrt()) as usize + 2;
    let mut counts = vec![0u64; 2 * span + 1];
    let mut min_seen = 0i64;
    let mut max_seen = 0i64;
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0usize;
    let mut pos = 0i64;
    let mut bits = BitPool::new(rng);

    // snapshot for milestone 0 profiles (empty)
    while next < milestones.len() && milestones[next] == 0 {
        out.push(LocalTimeGrid {
            n_disc,
            spacing,
            time_fraction: 0.0,
            min_site: 0,
            values: Vec::new(),
        });
        next += 1;
    }

    // steps beyond the last milestone never enter any profile
    let last_needed = milestones.last().copied().unwrap_or(0);
    for k in 0..last_needed {
        if pos.unsigned_abs() as usize >= span {
            // double the window, recentering the counts
            let new_span = span * 2;
            let mut bigger = vec![0u64; 2 * new_span + 1];
            for (i, &c) in counts.iter().enumerate() {
                bigger[i + (new_span - span)] = c;
            }
            counts = bigger;
            span = new_span;
        }
        counts[(pos + span as i64) as usize] += 1;
        min_seen = min_seen.min(pos);
        max_seen = max_seen.max(pos);
        if next < milestones.len() && k + 1 == milestones[next] {
            while next < milestones.len() && k + 1 == milestones[next] {
                let values: Vec<f64> = (min_seen..=max_seen)
                    .map(|s| counts[(s + span as i64) as usize] as f64 * spacing)
                    .collect();
                out.push(LocalTimeGrid {
                    n_disc,
                    spacing,
                    time_fraction: milestones[next] as f64 / n_disc as f64,
                    min_site: min_seen,
                    values,
                });
                next += 1;
            }
        }
        pos += if bits.next_bit() { 1 } else { -1 };
    }
    out
}

/// Gram matrix of local-time profiles with its determinant.
#[derive(Debug, Clone)]
pub struct GramSample {
    pub times: Vec<f64>,
    pub matrix: SymMatrix,
    pub det: f64,
    /// Determinant clamped to zero by the pivot tolerance.
    pub det_clamped: bool,
}

/// Relative pivot tolerance for the Gram determinant factorization.
pub const GRAM_PIVOT_TOL: f64 = 1e-12;

/// Pairwise inner products of the profiles and the determinant by a
/// symmetric factorization. All grids must share one path and spacing.
pub fn gram_det(grids: &[LocalTimeGrid]) -> Result<GramSample, BrownianError> {
    let m = grids.len();
    assert!(m >= 1);
    let spacing = grids[0].spacing;
    if grids.iter().any(|g| g.spacing != spacing) {
        return Err(BrownianError::DegenerateInput(
            "mismatched grid spacing".into(),
        ));
    }
    let mut matrix = SymMatrix::zeros(m);
    for i in 0..m {
        for j in i..m {
            matrix.set(i, j, grids[i].inner(&grids[j])?);
        }
    }
    let det = spd_determinant(&matrix, GRAM_PIVOT_TOL);
    Ok(GramSample {
        times: grids.iter().map(|g| g.time_fraction).collect(),
        matrix,
        det: det.det,
        det_clamped: det.clamped,
    })
}

/// Distance in L2 from `target` to the span of `base` profiles, computed by
/// an independent projection (normal equations), not via determinants.
pub fn residual_distance(
    base: &[LocalTimeGrid],
    target: &LocalTimeGrid,
) -> Result<f64, BrownianError> {
    let norm_sq = target.l2_norm_sq();
    if base.is_empty() {
        return Ok(norm_sq.sqrt());
    }
    let m = base.len();
    let mut g = SymMatrix::zeros(m);
    for i in 0..m {
        for j in i..m {
            g.set(i, j, base[i].inner(&base[j])?);
        }
    }
    let c: Vec<f64> = base
        .iter()
        .map(|b| b.inner(target))
        .collect::<Result<_, _>>()?;
    let a = spd_solve(&g, &c).ok_or_else(|| {
        BrownianError::DegenerateInput("base profiles are numerically dependent".into())
    })?;
    let proj: f64 = c.iter().zip(a.iter()).map(|(ci, ai)| ci * ai).sum();
    Ok((norm_sq - proj).max(0.0).sqrt())
}

/// Per-sample inverse L2 norms `|L_1|^{-1}` over independent paths.
///
/// Each sample checks the occupation bound `|L_1|^2 >= 1 / range_width`
/// (Cauchy–Schwarz against occupation 1).
pub fn l2_inverse_samples(n_disc: u64, budget: u64, root: &StreamRng) -> Vec<f64> {
    par_collect(budget, |r| {
        let mut rng = root.split(r);
        let grid = sample_local_time_grid(n_disc, &[1.0], &mut rng).pop().unwrap();
        let norm_sq = grid.l2_norm_sq();
        let range_width = grid.site_count() as f64 * grid.spacing;
        assert!(
            norm_sq * range_width >= 1.0 - 1e-9,
            "occupation Cauchy-Schwarz violated: {norm_sq} * {range_width} < 1"
        );
        norm_sq.powf(-0.5)
    })
}

pub fn l2_inverse_moment(n_disc: u64, budget: u64, root: &StreamRng) -> SampleStats {
    SampleStats::from_slice(&l2_inverse_samples(n_disc, budget, root))
}

/// Width of the interval covered by the `V_k` indicator family.
///
/// `V_k` is spanned by the indicators of `k` equal cells tiling
/// `[-R/2, R/2)`; for even `k` these are the cells `[R m / k, R (m+1) / k)`
/// with `m = -k/2 .. k/2 - 1` (the centered index range), and for odd `k`
/// the same tiling shifted to stay symmetric. With `R = 3` the cover holds
/// the bulk of realized Brownian ranges, so the inverse distance tracks its
/// `k^{1/2}` growth at desk-scale `k` instead of saturating on the mass
/// outside a unit cover.
pub const VK_COVER_WIDTH: f64 = 3.0;

/// L2 distance from a profile to the indicator subspace `V_k`.
///
/// The projection is per-cell averaging against the full cell width (the
/// profile is zero off its range, and those zeros count), plus the L2 mass
/// outside the covered interval. Cell boundaries nest exactly between `k`
/// and `2k`, so refining `k` never increases the distance.
pub fn vk_distance(grid: &LocalTimeGrid, k: u64) -> f64 {
    assert!(k >= 1);
    let cells_per_unit = k as f64 / VK_COVER_WIDTH;
    let h = grid.spacing;
    let half = 0.5 * VK_COVER_WIDTH;
    let n_cells = k as usize;
    let mut int_l = vec![0.0f64; n_cells]; // ∫_cell L
    let mut int_l2 = vec![0.0f64; n_cells]; // ∫_cell L^2
    let mut outside = 0.0f64;
    for (site, v) in grid.sites() {
        let x = site as f64 * h;
        let cell = ((x + half) * cells_per_unit).floor() as i64;
        if cell < 0 || cell >= n_cells as i64 {
            outside += v * v * h;
        } else {
            int_l[cell as usize] += v * h;
            int_l2[cell as usize] += v * v * h;
        }
    }
    let mut dist_sq = outside;
    for c in 0..n_cells {
        dist_sq += int_l2[c] - cells_per_unit * int_l[c] * int_l[c];
    }
    dist_sq.max(0.0).sqrt()
}

/// Inverse-distance samples to `V_k`; zero distances are grid artifacts
/// (the continuum distance is a.s. positive) and are excluded and counted.
#[derive(Debug, Clone)]
pub struct VkInverseSamples {
    pub k: u64,
    pub values: Vec<f64>,
    pub degenerate: u64,
}

pub fn vk_inverse_samples(k: u64, n_disc: u64, budget: u64, root: &StreamRng) -> VkInverseSamples {
    let distances = par_collect(budget, |r| {
        let mut rng = root.split(r);
        let grid = sample_local_time_grid(n_disc, &[1.0], &mut rng).pop().unwrap();
        vk_distance(&grid, k)
    });
    let degenerate = distances.iter().filter(|&&d| d == 0.0).count() as u64;
    let values: Vec<f64> = distances.into_iter().filter(|&d| d > 0.0).map(|d| 1.0 / d).collect();
    VkInverseSamples { k, values, degenerate }
}

pub fn vk_inverse_moment(k: u64, n_disc: u64, budget: u64, root: &StreamRng) -> (SampleStats, u64) {
    let s = vk_inverse_samples(k, n_disc, budget, root);
    (SampleStats::from_slice(&s.values), s.degenerate)
}

/// Least-squares slope of `log E[d(L_1, V_k)^{-1}]` against `log k`.
pub fn exponent_fit(ks: &[u64], means: &[f64]) -> f64 {
    let x: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let y: Vec<f64> = means.iter().map(|&m| m.ln()).collect();
    crate::stats::linear_fit(&x, &y).0
}

/// Plain Monte Carlo of `E[det D_{times}^{-1/2}]` at fixed, separated
/// times; paths whose Gram determinant clamps to zero are excluded and
/// counted.
pub fn gram_inv_sqrt_moment(
    times: &[f64],
    n_disc: u64,
    budget: u64,
    root: &StreamRng,
) -> (SampleStats, u64) {
    let vals = par_collect(budget, |r| {
        let mut rng = root.split(r);
        let grids = sample_local_time_grid(n_disc, times, &mut rng);
        let gram = gram_det(&grids).expect("one path, one spacing");
        if gram.det > 0.0 {
            gram.det.powf(-0.5)
        } else {
            f64::NAN
        }
    });
    let degenerate = vals.iter().filter(|v| v.is_nan()).count() as u64;
    let kept: Vec<f64> = vals.into_iter().filter(|v| !v.is_nan()).collect();
    (SampleStats::from_slice(&kept), degenerate)
}

/// One sample of the limit-process endpoint: the stochastic integral of the
/// profile against white noise, `sum_site L(site) * sqrt(spacing) * g_site`.
/// The integration window is the full realized walk range.
pub fn delta_endpoint_from_profile(grid: &LocalTimeGrid, rng: &mut StreamRng) -> f64 {
    let sqrt_h = grid.spacing.sqrt();
    let mut sum = 0.0;
    for &v in &grid.values {
        let g: f64 = StandardNormal.sample(rng);
        sum += v * sqrt_h * g;
    }
    sum
}

/// Conditional standard deviation of the endpoint given the profile; equals
/// the profile's L2 norm (the isometry of the integral).
pub fn delta_conditional_std(grid: &LocalTimeGrid) -> f64 {
    grid.l2_norm_sq().sqrt()
}

pub fn simulate_delta_endpoint(n_disc: u64, rng: &mut StreamRng) -> f64 {
    let grid = sample_local_time_grid(n_disc, &[1.0], rng).pop().unwrap();
    delta_endpoint_from_profile(&grid, rng)
}

/// Independent endpoint samples.
pub fn delta_endpoint_samples(n_disc: u64, budget: u64, root: &StreamRng) -> Vec<f64> {
    par_collect(budget, |r| {
        let mut rng = root.split(r);
        simulate_delta_endpoint(n_disc, &mut rng)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigenvalues;
    use crate::stats::SampleStats;

    fn rng(id: u64) -> StreamRng {
        StreamRng::from_path(99, &[id])
    }

    #[test]
    fn occupation_is_exact_at_each_time() {
        let grids = sample_local_time_grid(1024, &[0.25, 0.5, 1.0], &mut rng(0));
        for g in &grids {
            let occ = g.occupation();
            assert!(
                (occ - g.time_fraction).abs() < 1e-12,
                "occ={occ} frac={}",
                g.time_fraction
            );
        }
        assert_eq!(grids[2].time_fraction, 1.0);
    }

    #[test]
    fn profiles_are_monotone_in_time() {
        let grids = sample_local_time_grid(512, &[0.5, 1.0], &mut rng(1));
        let (a, b) = (&grids[0], &grids[1]);
        for (site, v) in a.sites() {
            assert!(v <= b.value_at(site) + 1e-15);
        }
    }

    #[test]
    fn single_step_grid() {
        let g = sample_local_time_grid(1, &[1.0], &mut rng(2)).pop().unwrap();
        assert_eq!(g.site_count(), 1);
        assert_eq!(g.value_at(0), 1.0); // count 1 times spacing 1
    }

    #[test]
    fn gram_m1_det_is_norm_squared() {
        let g = sample_local_time_grid(256, &[1.0], &mut rng(3)).pop().unwrap();
        let gram = gram_det(std::slice::from_ref(&g)).unwrap();
        assert!(gram.det > 0.0);
        assert!((gram.det - g.l2_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn duplicated_time_gives_zero_det() {
        let g = sample_local_time_grid(256, &[1.0], &mut rng(4)).pop().unwrap();
        let gram = gram_det(&[g.clone(), g]).unwrap();
        assert!(gram.det_clamped);
        assert_eq!(gram.det, 0.0);
    }

    #[test]
    fn gram_matrices_are_psd() {
        for id in 0..20 {
            let grids = sample_local_time_grid(512, &[0.3, 0.6, 1.0], &mut rng(10 + id));
            let gram = gram_det(&grids).unwrap();
            let ev = sym_eigenvalues(&gram.matrix);
            let tol = 1e-9 * gram.matrix.trace();
            assert!(ev[0] >= -tol, "eigenvalue {} below -{tol}", ev[0]);
        }
    }

    #[test]
    fn gram_recursion_matches_projection() {
        // det^(1/2)(m+1) = det^(1/2)(m) * d(L_{t_{m+1}}, span)
        for id in 0..25 {
            let grids = sample_local_time_grid(4096, &[0.25, 0.5, 0.75, 1.0], &mut rng(50 + id));
            for m in 1..grids.len() {
                let d_small = gram_det(&grids[..m]).unwrap().det.sqrt();
                let d_big = gram_det(&grids[..=m]).unwrap().det.sqrt();
                let resid = residual_distance(&grids[..m], &grids[m]).unwrap();
                let rel = (d_big - d_small * resid).abs() / d_big;
                assert!(rel < 1e-8, "m={m} rel={rel}");
            }
        }
    }

    #[test]
    fn mismatched_spacing_rejected() {
        let a = sample_local_time_grid(256, &[1.0], &mut rng(5)).pop().unwrap();
        let b = sample_local_time_grid(1024, &[1.0], &mut rng(6)).pop().unwrap();
        assert!(matches!(
            gram_det(&[a, b]),
            Err(BrownianError::DegenerateInput(_))
        ));
    }

    #[test]
    fn inverse_norm_single_budget_is_single_sample() {
        let root = StreamRng::from_seed(17);
        let samples = l2_inverse_samples(512, 1, &root);
        assert_eq!(samples.len(), 1);
        let mut rng = root.split(0);
        let g = sample_local_time_grid(512, &[1.0], &mut rng).pop().unwrap();
        assert_eq!(samples[0], g.l2_norm_sq().powf(-0.5));
    }

    #[test]
    fn vk_exact_representability_is_degenerate() {
        // profile constant on each cell of V_2 (cells [-1.5, 0) and
        // [0, 1.5) at cover width 3) and zero outside
        let grid = LocalTimeGrid {
            n_disc: 16,
            spacing: 0.25,
            time_fraction: 1.0,
            min_site: -6,
            values: vec![3.0; 12],
        };
        assert_eq!(vk_distance(&grid, 2), 0.0);
        // and a two-level profile aligned to the same cells
        let mut values = vec![3.0; 6];
        values.extend(vec![5.0; 6]);
        let grid = LocalTimeGrid {
            n_disc: 16,
            spacing: 0.25,
            time_fraction: 1.0,
            min_site: -6,
            values,
        };
        assert_eq!(vk_distance(&grid, 2), 0.0);
    }

    #[test]
    fn vk_nested_subspaces_decrease_distance() {
        // cell boundaries nest between k and 2k for every k
        for id in 0..10 {
            let g = sample_local_time_grid(4096, &[1.0], &mut rng(100 + id)).pop().unwrap();
            for k in [1u64, 2, 3, 4, 8, 16] {
                let d1 = vk_distance(&g, k);
                let d2 = vk_distance(&g, 2 * k);
                assert!(d2 <= d1 + 1e-12, "k={k}: {d2} > {d1}");
            }
        }
    }

    #[test]
    fn delta_endpoint_moments() {
        let root = StreamRng::from_seed(23);
        let samples = delta_endpoint_samples(1024, 4000, &root);
        let s = SampleStats::from_slice(&samples);
        assert!(s.mean().abs() < 3.0 * s.stderr());
        // isometry: Var(delta) == E[|L_1|^2]
        let norms: Vec<f64> = par_collect(4000, |r| {
            let mut rng = root.split(r);
            sample_local_time_grid(1024, &[1.0], &mut rng)
                .pop()
                .unwrap()
                .l2_norm_sq()
        });
        let n = SampleStats::from_slice(&norms);
        let var_se = s.variance() * (2.0 / (samples.len() as f64 - 1.0)).sqrt();
        let tol = 3.0 * (n.stderr().powi(2) + var_se.powi(2)).sqrt();
        assert!(
            (s.variance() - n.mean()).abs() < tol,
            "var={} E|L|^2={} tol={tol}",
            s.variance(),
            n.mean()
        );
    }

    #[test]
    fn degenerate_profile_conditional_std() {
        let grid = LocalTimeGrid {
            n_disc: 4,
            spacing: 0.5,
            time_fraction: 1.0,
            min_site: 0,
            values: vec![2.0],
        };
        // one site: std = value * sqrt(spacing)
        assert!((delta_conditional_std(&grid) - 2.0 * 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn local_time_scaling_law() {
        // E|L_u|^2 = u^{3/2} E|L_1|^2 within 3 combined stderr
        let root = StreamRng::from_seed(31);
        let reps = 4000u64;
        for u in [0.25, 0.5] {
            let pairs: Vec<(f64, f64)> = (0..reps)
                .map(|r| {
                    let mut rng = root.split(r);
                    let grids = sample_local_time_grid(4096, &[u, 1.0], &mut rng);
                    (grids[0].l2_norm_sq(), grids[1].l2_norm_sq())
                })
                .collect();
            let su = SampleStats::from_slice(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
            let s1 = SampleStats::from_slice(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
            let predicted = u.powf(1.5) * s1.mean();
            let tol = 3.0 * (su.stderr() + u.powf(1.5) * s1.stderr());
            assert!(
                (su.mean() - predicted).abs() < tol,
                "u={u}: {} vs {predicted} (tol {tol})",
                su.mean()
            );
        }
    }
}
