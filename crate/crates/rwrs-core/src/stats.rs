//! Sample statistics with a deterministic reduction order.
//!
//! Replicates are aggregated chunk by chunk (fixed chunk size, chunk results
//! merged pairwise in index order), so estimates are bit-identical for any
//! worker count. All experiments in this crate go through these helpers.

use rayon::prelude::*;

/// Fixed chunk size for the parallel reductions. Part of the reproducibility
/// contract: changing it changes the floating-point reduction tree.
pub const CHUNK: usize = 4096;

/// Running (count, mean, centered second moment) accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl SampleStats {
    pub fn new() -> Self {
        SampleStats::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan's parallel merge; exact for the (count, mean, M2) triple.
    pub fn merge(a: SampleStats, b: SampleStats) -> SampleStats {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        let nf = n as f64;
        SampleStats {
            n,
            mean: a.mean + d * (b.n as f64 / nf),
            m2: a.m2 + b.m2 + d * d * (a.n as f64 * b.n as f64 / nf),
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; NaN for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn from_slice(xs: &[f64]) -> SampleStats {
        fn rec(xs: &[f64]) -> SampleStats {
            if xs.len() <= CHUNK {
                let mut s = SampleStats::new();
                for &x in xs {
                    s.push(x);
                }
                return s;
            }
            let mid = xs.len() / 2;
            SampleStats::merge(rec(&xs[..mid]), rec(&xs[mid..]))
        }
        rec(xs)
    }
}

/// Merge chunk accumulators pairwise in index order.
fn reduce_pairwise(mut level: Vec<SampleStats>) -> SampleStats {
    if level.is_empty() {
        return SampleStats::new();
    }
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|p| {
                if p.len() == 2 {
                    SampleStats::merge(p[0], p[1])
                } else {
                    p[0]
                }
            })
            .collect();
    }
    level[0]
}

/// Evaluate `f(replicate)` for `reps` replicates in parallel and reduce
/// deterministically. `f` must derive its own randomness from the replicate
/// index, so the result does not depend on scheduling.
pub fn par_batch_stats<F>(reps: u64, f: F) -> SampleStats
where
    F: Fn(u64) -> f64 + Sync,
{
    let n_chunks = ((reps as usize) + CHUNK - 1) / CHUNK;
    let per_chunk: Vec<SampleStats> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = (c * CHUNK) as u64;
            let hi = reps.min(lo + CHUNK as u64);
            let mut s = SampleStats::new();
            for r in lo..hi {
                s.push(f(r));
            }
            s
        })
        .collect();
    reduce_pairwise(per_chunk)
}

/// Same contract, but each replicate yields a fixed-length vector of
/// statistics (e.g. several powers of one sample); one accumulator per slot.
pub fn par_batch_stats_multi<F>(reps: u64, width: usize, f: F) -> Vec<SampleStats>
where
    F: Fn(u64, &mut [f64]) + Sync,
{
    let n_chunks = ((reps as usize) + CHUNK - 1) / CHUNK;
    let per_chunk: Vec<Vec<SampleStats>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = (c * CHUNK) as u64;
            let hi = reps.min(lo + CHUNK as u64);
            let mut acc = vec![SampleStats::new(); width];
            let mut buf = vec![0.0; width];
            for r in lo..hi {
                f(r, &mut buf);
                for (a, &x) in acc.iter_mut().zip(buf.iter()) {
                    a.push(x);
                }
            }
            acc
        })
        .collect();
    (0..width)
        .map(|j| reduce_pairwise(per_chunk.iter().map(|c| c[j]).collect()))
        .collect()
}

/// Collect per-replicate samples in replicate order.
pub fn par_collect<F>(reps: u64, f: F) -> Vec<f64>
where
    F: Fn(u64) -> f64 + Sync + Send,
{
    (0..reps).into_par_iter().map(f).collect()
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Median by sorting a copy; NaN on empty input.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median-of-means over `groups` equal slices (trailing remainder ignored).
pub fn median_of_means(xs: &[f64], groups: usize) -> f64 {
    assert!(groups >= 1);
    let size = xs.len() / groups;
    if size == 0 {
        return median(xs);
    }
    let means: Vec<f64> = (0..groups)
        .map(|g| xs[g * size..(g + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    median(&means)
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
