//! Exact distributions of the RWRS by path enumeration.
//!
//! For small `k` the distribution of `Z_k` is computed exactly: walk paths
//! of length `k-1` are enumerated and grouped by the multiset of their site
//! occupation counts (the conditional law of `Z_k` given the path depends
//! only on that multiset), then for each group the scenery is convolved
//! exactly in rational arithmetic. Rationals are converted to doubles only
//! at the API boundary, so these values share no failure mode with any
//! Monte Carlo estimate they are compared against.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::lattice::{LatticePmf, ModelConfig};
use crate::observable::Observable;

pub type Rat = Ratio<BigInt>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("time index {k} exceeds enumeration cap {cap}")]
    CapExceeded { k: u64, cap: u64 },
    #[error("model masses are not exact rationals")]
    NonRationalModel,
    #[error("times and values have mismatched lengths")]
    LengthMismatch,
    #[error("times must be strictly ascending")]
    TimesNotAscending,
}

/// Exact law of `Z_k`: rational masses summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPmf {
    pub k: u64,
    atoms: BTreeMap<i64, Rat>,
}

impl ExactPmf {
    pub fn atoms(&self) -> &BTreeMap<i64, Rat> {
        &self.atoms
    }

    pub fn prob(&self, v: i64) -> Rat {
        self.atoms.get(&v).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn prob_f64(&self, v: i64) -> f64 {
        self.atoms.get(&v).map(rat_to_f64).unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> Rat {
        self.atoms.values().cloned().sum()
    }

    /// Total-variation distance to an empirical law given as value counts.
    pub fn tv_distance_from_counts(&self, counts: &BTreeMap<i64, u64>, n: u64) -> f64 {
        let mut keys: Vec<i64> = self.atoms.keys().copied().collect();
        keys.extend(counts.keys().copied());
        keys.sort_unstable();
        keys.dedup();
        0.5 * keys
            .iter()
            .map(|v| {
                let emp = counts.get(v).copied().unwrap_or(0) as f64 / n as f64;
                (emp - self.prob_f64(*v)).abs()
            })
            .sum::<f64>()
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Path-enumeration oracle with a configurable time cap.
#[derive(Debug, Clone, Copy)]
pub struct ExactOracle {
    pub cap: u64,
}

impl Default for ExactOracle {
    fn default() -> Self {
        // ~10^6 paths for binary step laws
        ExactOracle { cap: 20 }
    }
}

fn atom_masses(pmf: &LatticePmf) -> Vec<(i64, Rat)> {
    pmf.atoms().iter().map(|a| (a.value, a.mass())).collect()
}

/// Convolution of `dist` with the law of `c * xi`.
fn convolve_scaled(dist: &BTreeMap<i64, Rat>, scenery: &[(i64, Rat)], c: i64) -> BTreeMap<i64, Rat> {
    let mut out: BTreeMap<i64, Rat> = BTreeMap::new();
    for (z, p) in dist {
        for (v, q) in scenery {
            let w = z + c * v;
            let m = p.clone() * q.clone();
            out.entry(w).and_modify(|e| *e += m.clone()).or_insert(m);
        }
    }
    out
}

/// Enumerate walk paths `S_0..S_{positions-1}` and hand each leaf's
/// occupation-count multiset to `visit(sorted_counts, path_probability)`.
fn enumerate_profiles<F: FnMut(&[u32], Rat)>(step: &[(i64, Rat)], positions: u64, mut visit: F) {
    if positions == 0 {
        visit(&[], Rat::one());
        return;
    }
    let max_step = step.iter().map(|&(v, _)| v.unsigned_abs()).max().unwrap() as i64;
    let halfspan = positions as i64 * max_step + 1;
    let origin = halfspan as usize;
    let mut counts = vec![0u32; 2 * origin + 1];
    counts[origin] = 1; // S_0 = 0

    fn go<F: FnMut(&[u32], Rat)>(
        step: &[(i64, Rat)],
        positions: u64,
        depth: u64,
        pos: i64,
        prob: Rat,
        counts: &mut [u32],
        key: &mut Vec<u32>,
        visit: &mut F,
    ) {
        if depth == positions {
            key.clear();
            key.extend(counts.iter().copied().filter(|&c| c > 0));
            key.sort_unstable();
            visit(key, prob);
            return;
        }
        for (v, q) in step {
            let next = pos + v;
            counts[next as usize] += 1;
            go(step, positions, depth + 1, next, prob.clone() * q.clone(), counts, key, visit);
            counts[next as usize] -= 1;
        }
    }
    let mut key = Vec::new();
    go(step, positions, 1, origin as i64, Rat::one(), &mut counts, &mut key, &mut visit);
}

impl ExactOracle {
    fn check_model(&self, model: &ModelConfig, k: u64) -> Result<(), OracleError> {
        if k > self.cap {
            return Err(OracleError::CapExceeded { k, cap: self.cap });
        }
        if !model.step.is_exact() || !model.scenery.is_exact() {
            return Err(OracleError::NonRationalModel);
        }
        Ok(())
    }

    /// Exact law of `Z_k = xi_{S_0} + ... + xi_{S_{k-1}}`.
    pub fn z_pmf(&self, model: &ModelConfig, k: u64) -> Result<ExactPmf, OracleError> {
        self.check_model(model, k)?;
        if k == 0 {
            let mut atoms = BTreeMap::new();
            atoms.insert(0, Rat::one());
            return Ok(ExactPmf { k, atoms });
        }
        let step = atom_masses(&model.step);
        let scenery = atom_masses(&model.scenery);

        // group paths by occupation-count multiset
        let mut groups: HashMap<Vec<u32>, Rat> = HashMap::new();
        enumerate_profiles(&step, k, |key, prob| {
            groups
                .entry(key.to_vec())
                .and_modify(|e| *e += prob.clone())
                .or_insert(prob);
        });

        let mut atoms: BTreeMap<i64, Rat> = BTreeMap::new();
        for (key, weight) in groups {
            let mut dist: BTreeMap<i64, Rat> = BTreeMap::new();
            dist.insert(0, Rat::one());
            for &c in &key {
                dist = convolve_scaled(&dist, &scenery, c as i64);
            }
            for (z, p) in dist {
                let m = p * weight.clone();
                atoms.entry(z).and_modify(|e| *e += m.clone()).or_insert(m);
            }
        }
        Ok(ExactPmf { k, atoms })
    }

    /// Exact joint law of `(Z_{t_1}, ..., Z_{t_j})` for ascending times.
    pub fn joint_pmf(
        &self,
        model: &ModelConfig,
        times: &[u64],
    ) -> Result<BTreeMap<Vec<i64>, Rat>, OracleError> {
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OracleError::TimesNotAscending);
        }
        let t_max = times.last().copied().unwrap_or(0);
        self.check_model(model, t_max)?;

        let j = times.len();
        let mut out: BTreeMap<Vec<i64>, Rat> = BTreeMap::new();
        if t_max == 0 {
            out.insert(vec![0; j], Rat::one());
            return Ok(out);
        }

        let step = atom_masses(&model.step);
        let scenery = atom_masses(&model.scenery);

        // enumerate full paths; group by the multiset of per-site count
        // vectors (one count per requested time)
        let mut groups: HashMap<Vec<Vec<u32>>, Rat> = HashMap::new();
        let mut path: Vec<i64> = vec![0];
        fn dfs(
            step: &[(i64, Rat)],
            times: &[u64],
            path: &mut Vec<i64>,
            t_max: u64,
            prob: Rat,
            groups: &mut HashMap<Vec<Vec<u32>>, Rat>,
        ) {
            if path.len() as u64 == t_max {
                // per-site visit-count vector at each requested time
                let mut per_site: HashMap<i64, Vec<u32>> = HashMap::new();
                for (p, &site) in path.iter().enumerate() {
                    let entry = per_site
                        .entry(site)
                        .or_insert_with(|| vec![0; times.len()]);
                    for (ti, &t) in times.iter().enumerate() {
                        if (p as u64) < t {
                            entry[ti] += 1;
                        }
                    }
                }
                let mut key: Vec<Vec<u32>> = per_site.into_values().collect();
                key.sort_unstable();
                groups
                    .entry(key)
                    .and_modify(|e| *e += prob.clone())
                    .or_insert(prob);
                return;
            }
            let last = *path.last().unwrap();
            for (v, q) in step {
                path.push(last + v);
                dfs(step, times, path, t_max, prob.clone() * q.clone(), groups);
                path.pop();
            }
        }
        dfs(&step, times, &mut path, t_max, Rat::one(), &mut groups);

        for (key, weight) in groups {
            // vector-valued convolution over sites
            let mut dist: BTreeMap<Vec<i64>, Rat> = BTreeMap::new();
            dist.insert(vec![0; j], Rat::one());
            for counts in &key {
                let mut next: BTreeMap<Vec<i64>, Rat> = BTreeMap::new();
                for (z, p) in &dist {
                    for (v, q) in &scenery {
                        let mut w = z.clone();
                        for (wi, &c) in w.iter_mut().zip(counts.iter()) {
                            *wi += v * c as i64;
                        }
                        let m = p.clone() * q.clone();
                        next.entry(w).and_modify(|e| *e += m.clone()).or_insert(m);
                    }
                }
                dist = next;
            }
            for (z, p) in dist {
                let m = p * weight.clone();
                out.entry(z).and_modify(|e| *e += m.clone()).or_insert(m);
            }
        }
        Ok(out)
    }

    /// `P(Z_{t_1} = a_1, ..., Z_{t_j} = a_j)` exactly.
    pub fn joint_prob(
        &self,
        model: &ModelConfig,
        times: &[u64],
        values: &[i64],
    ) -> Result<Rat, OracleError> {
        if times.len() != values.len() {
            return Err(OracleError::LengthMismatch);
        }
        let pmf = self.joint_pmf(model, times)?;
        Ok(pmf.get(values).cloned().unwrap_or_else(Rat::zero))
    }

    /// Autocovariance coefficient of the additive functional at congruence
    /// index `k` and lag `lag`:
    /// `sum_{a in k*alpha + dZ} sum_b f(a) f(b) P(Z_lag = b - a)`.
    pub fn a_coefficient(
        &self,
        model: &ModelConfig,
        f: &Observable,
        k: u64,
        lag: u64,
    ) -> Result<f64, OracleError> {
        let pmf = self.z_pmf(model, lag)?;
        let mut sum = 0.0;
        for &(a, fa) in f.pairs() {
            if !model.periodicity.admits(k, a) {
                continue;
            }
            for &(b, fb) in f.pairs() {
                sum += fa * fb * pmf.prob_f64(b - a);
            }
        }
        Ok(sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::validate_model;
    use num_traits::Signed;

    fn rademacher() -> ModelConfig {
        ModelConfig::rademacher()
    }

    fn skewed() -> ModelConfig {
        // step ±1, scenery P(1)=3/4, P(-3)=1/4 (d = 4, alpha = 1)
        let step = LatticePmf::from_rationals(&[(1, 1, 2), (-1, 1, 2)]).unwrap();
        let scenery = LatticePmf::from_rationals(&[(1, 3, 4), (-3, 1, 4)]).unwrap();
        validate_model(step, scenery).unwrap()
    }

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn z0_is_point_mass_at_zero() {
        let pmf = ExactOracle::default().z_pmf(&rademacher(), 0).unwrap();
        assert_eq!(pmf.atoms().len(), 1);
        assert_eq!(pmf.prob(0), Rat::one());
    }

    #[test]
    fn z1_is_the_scenery_law() {
        let pmf = ExactOracle::default().z_pmf(&rademacher(), 1).unwrap();
        assert_eq!(pmf.prob(1), rat(1, 2));
        assert_eq!(pmf.prob(-1), rat(1, 2));
    }

    #[test]
    fn z2_two_independent_scenery_values() {
        // S_1 != S_0 always, so Z_2 is a sum of two independent Rademachers
        let pmf = ExactOracle::default().z_pmf(&rademacher(), 2).unwrap();
        assert_eq!(pmf.prob(-2), rat(1, 4));
        assert_eq!(pmf.prob(0), rat(1, 2));
        assert_eq!(pmf.prob(2), rat(1, 4));
    }

    #[test]
    fn masses_sum_to_one_and_respect_congruence() {
        let oracle = ExactOracle::default();
        for model in [rademacher(), skewed()] {
            for k in 0..=8 {
                let pmf = oracle.z_pmf(&model, k).unwrap();
                assert!(pmf.total_mass().is_one(), "mass leak at k={k}");
                for (&v, p) in pmf.atoms() {
                    if p.is_positive() {
                        assert!(model.periodicity.admits(k, v), "k={k} v={v}");
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_model_symmetric_pmf() {
        let oracle = ExactOracle::default();
        for k in 1..=7 {
            let pmf = oracle.z_pmf(&rademacher(), k).unwrap();
            for (&v, p) in pmf.atoms() {
                assert_eq!(*p, pmf.prob(-v), "k={k} v={v}");
            }
        }
    }

    #[test]
    fn joint_examples() {
        let oracle = ExactOracle::default();
        let m = rademacher();
        assert_eq!(oracle.joint_prob(&m, &[1, 2], &[1, 0]).unwrap(), rat(1, 4));
        assert_eq!(oracle.joint_prob(&m, &[1], &[0]).unwrap(), Rat::zero());
        assert_eq!(oracle.joint_prob(&m, &[2], &[0]).unwrap(), rat(1, 2));
    }

    #[test]
    fn joint_marginalizes_to_shorter_joint() {
        let oracle = ExactOracle::default();
        let m = rademacher();
        let joint = oracle.joint_pmf(&m, &[1, 3]).unwrap();
        let single = oracle.z_pmf(&m, 1).unwrap();
        let mut marginal: BTreeMap<i64, Rat> = BTreeMap::new();
        for (v, p) in &joint {
            marginal
                .entry(v[0])
                .and_modify(|e| *e += p.clone())
                .or_insert_with(|| p.clone());
        }
        for (&a, p) in &marginal {
            assert_eq!(*p, single.prob(a), "a={a}");
        }
    }

    #[test]
    fn a_coefficient_examples() {
        let oracle = ExactOracle::default();
        let m = rademacher();
        let f = Observable::delta_diff(1);
        // k even: only a = 0 admissible
        assert_eq!(oracle.a_coefficient(&m, &f, 2, 0).unwrap(), 1.0);
        assert_eq!(oracle.a_coefficient(&m, &f, 2, 1).unwrap(), -0.5);
        assert_eq!(
            oracle.a_coefficient(&m, &Observable::zero(), 2, 1).unwrap(),
            0.0
        );
    }

    #[test]
    fn cap_and_rationality_enforced() {
        let oracle = ExactOracle { cap: 5 };
        assert_eq!(
            oracle.z_pmf(&rademacher(), 6),
            Err(OracleError::CapExceeded { k: 6, cap: 5 })
        );
        let approx = LatticePmf::from_probs(&[(1, 0.5), (-1, 0.5)]).unwrap();
        let model = validate_model(approx.clone(), approx).unwrap();
        assert_eq!(
            ExactOracle::default().z_pmf(&model, 2),
            Err(OracleError::NonRationalModel)
        );
    }

    /// Naive per-path enumeration (no profile grouping); the grouped
    /// implementation must reproduce it exactly.
    fn naive_z_pmf(model: &ModelConfig, k: u64) -> BTreeMap<i64, Rat> {
        let step = atom_masses(&model.step);
        let scenery = atom_masses(&model.scenery);
        let mut out: BTreeMap<i64, Rat> = BTreeMap::new();
        if k == 0 {
            out.insert(0, Rat::one());
            return out;
        }
        fn dfs(
            step: &[(i64, Rat)],
            scenery: &[(i64, Rat)],
            path: &mut Vec<i64>,
            k: u64,
            prob: Rat,
            out: &mut BTreeMap<i64, Rat>,
        ) {
            if path.len() as u64 == k {
                let mut counts: BTreeMap<i64, i64> = BTreeMap::new();
                for &s in path.iter() {
                    *counts.entry(s).or_insert(0) += 1;
                }
                let mut dist: BTreeMap<i64, Rat> = BTreeMap::new();
                dist.insert(0, Rat::one());
                for (_, c) in counts {
                    dist = convolve_scaled(&dist, scenery, c);
                }
                for (z, p) in dist {
                    let m = p * prob.clone();
                    out.entry(z).and_modify(|e| *e += m.clone()).or_insert(m);
                }
                return;
            }
            let last = *path.last().unwrap();
            for (v, q) in step {
                path.push(last + v);
                dfs(step, scenery, path, k, prob.clone() * q.clone(), out);
                path.pop();
            }
        }
        let mut path = vec![0i64];
        dfs(&step, &scenery, &mut path, k, Rat::one(), &mut out);
        out
    }

    #[test]
    fn grouped_matches_naive_enumeration() {
        let oracle = ExactOracle::default();
        for model in [rademacher(), skewed()] {
            for k in 1..=8 {
                let grouped = oracle.z_pmf(&model, k).unwrap();
                let naive = naive_z_pmf(&model, k);
                assert_eq!(grouped.atoms(), &naive, "k={k}");
            }
        }
    }
}
