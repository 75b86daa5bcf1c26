//! Finitely supported observables `f : Z -> R`.

use serde::{Deserialize, Serialize};

/// A real-valued function on the integers with finite support, stored as
/// sorted `(level, weight)` pairs with nonzero weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pairs: Vec<(i64, f64)>,
}

impl Observable {
    /// Build from arbitrary pairs; repeated levels are summed, zero weights
    /// dropped.
    pub fn from_pairs(pairs: &[(i64, f64)]) -> Self {
        let mut v: Vec<(i64, f64)> = Vec::new();
        let mut sorted = pairs.to_vec();
        sorted.sort_by_key(|&(a, _)| a);
        for (a, w) in sorted {
            match v.last_mut() {
                Some((la, lw)) if *la == a => *lw += w,
                _ => v.push((a, w)),
            }
        }
        v.retain(|&(_, w)| w != 0.0);
        Observable { pairs: v }
    }

    /// The indicator of a single level.
    pub fn delta(a: i64) -> Self {
        Observable::from_pairs(&[(a, 1.0)])
    }

    /// `delta(0) - delta(a)`, the canonical centered observable.
    pub fn delta_diff(a: i64) -> Self {
        Observable::from_pairs(&[(0, 1.0), (a, -1.0)])
    }

    pub fn zero() -> Self {
        Observable { pairs: Vec::new() }
    }

    pub fn pairs(&self) -> &[(i64, f64)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `sum_a f(a)`.
    pub fn total(&self) -> f64 {
        self.pairs.iter().map(|&(_, w)| w).sum()
    }

    /// `sum_a |f(a)|`.
    pub fn total_abs(&self) -> f64 {
        self.pairs.iter().map(|&(_, w)| w.abs()).sum()
    }

    /// Whether `sum_a f(a) = 0` up to rounding in the stored weights.
    pub fn is_centered(&self) -> bool {
        let scale = self.total_abs().max(1.0);
        self.total().abs() <= 1e-12 * scale
    }

    /// Evaluate `f(a)`; zero off the support.
    #[inline]
    pub fn eval(&self, a: i64) -> f64 {
        // supports are tiny (a handful of levels); linear scan beats search
        for &(lvl, w) in &self.pairs {
            if lvl == a {
                return w;
            }
        }
        0.0
    }

    /// All pairwise differences `a - b` over the support, deduplicated.
    pub fn support_differences(&self) -> Vec<i64> {
        let mut d: Vec<i64> = self
            .pairs
            .iter()
            .flat_map(|&(a, _)| self.pairs.iter().map(move |&(b, _)| a - b))
            .collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_diff_is_centered() {
        let f = Observable::delta_diff(1);
        assert!(f.is_centered());
        assert_eq!(f.eval(0), 1.0);
        assert_eq!(f.eval(1), -1.0);
        assert_eq!(f.eval(7), 0.0);
    }

    #[test]
    fn duplicate_levels_are_merged() {
        let f = Observable::from_pairs(&[(2, 1.0), (2, 2.0), (3, -3.0), (5, 0.0)]);
        assert_eq!(f.pairs(), &[(2, 3.0), (3, -3.0)]);
        assert_eq!(f.total(), 0.0);
    }

    #[test]
    fn support_differences_of_delta_diff() {
        let f = Observable::delta_diff(1);
        assert_eq!(f.support_differences(), vec![-1, 0, 1]);
    }
}
