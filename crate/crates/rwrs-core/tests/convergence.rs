//! Cross-module convergence checks at spacings where the trends are
//! statistically resolvable.

use rwrs_core::lattice::ModelConfig;
use rwrs_core::limits;
use rwrs_core::moments::Component;
use rwrs_core::oracle::ExactOracle;
use rwrs_core::rng::StreamRng;
use rwrs_core::{brownian, walk};

#[test]
fn ks_trend_resolvable_spacing() {
    // at n = 2^4 the endpoint law is visibly far from the limit; by 2^10 it
    // is close; the KS ordering over this spacing is resolvable at 10^4
    // samples per side
    let model = ModelConfig::rademacher();
    let table = limits::functional_limit_check(
        &model,
        &[1 << 4, 1 << 10, 1 << 16],
        10_000,
        1 << 16,
        &StreamRng::from_seed(2718),
    );
    let ks: Vec<f64> = table
        .rows_for("ks_distance")
        .iter()
        .map(|r| r.value)
        .collect();
    assert!(
        ks[0] > ks[1] && ks[1] > ks[2],
        "KS not decreasing over wide spacing: {ks:?}"
    );
    // the small-n distance is far above the noise floor
    assert!(ks[0] > 0.03, "n=16 should be visibly off the limit: {ks:?}");
}

#[test]
fn local_limit_small_n_anchor() {
    // exact P(Z_12 = 0) * 12^{3/4} sits within 25% of the asymptotic
    // plateau value d * E[|L_1|^{-1}] / sqrt(2 pi)
    let model = ModelConfig::rademacher();
    let oracle = ExactOracle::default();
    let exact = oracle.z_pmf(&model, 12).unwrap().prob_f64(0) * 12f64.powf(0.75);
    let inv = brownian::l2_inverse_moment(1 << 14, 4_000, &StreamRng::from_seed(3141));
    let plateau = 2.0 * inv.mean() / (2.0 * std::f64::consts::PI).sqrt();
    let rel = (exact - plateau).abs() / plateau;
    assert!(rel < 0.25, "exact {exact} vs plateau {plateau}: rel={rel}");
}

#[test]
fn local_limit_experiment_columns_consistent() {
    let model = ModelConfig::rademacher();
    let inv = Component { mean: 1.0, stderr: 0.01 };
    let table = limits::local_limit_check(
        &model,
        &[0],
        &[64, 256],
        20_000,
        &StreamRng::from_seed(99),
        inv,
    );
    // plateau rows have positive scaled probabilities and finite stderr
    for row in &table.rows {
        assert!(row.value > 0.0 && row.stderr.is_finite());
        assert_eq!(row.reps, 20_000);
    }
    // CSV rendering round-trips the row count
    assert_eq!(table.csv_rows().len(), table.rows.len());
}

#[test]
fn batch_statistics_deterministic_across_pools() {
    let model = ModelConfig::rademacher();
    let stat = walk::Statistic::EndpointThreeQuarters;
    let root = StreamRng::from_seed(1729);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| walk::batch_estimate(&model, 128, 3_000, &stat, &root).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.mean().to_bits(), b.mean().to_bits());
}
