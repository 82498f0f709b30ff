use becv::gaussian::{GaussianState, ModePartition};
use becv::rng::{derive, Stream};
use becv::tomography::{
    bootstrap_certify, default_setting_plan, estimate_covariance, generate_dataset, sample_state, BootstrapConfig,
    BootstrapReport,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{random_physical_state, tmsv};

fn rms_error(state: &GaussianState, count: usize, runs: u64) -> f64 {
    let plan = default_setting_plan(state.n_modes()).unwrap();
    let total: f64 = (0..runs)
        .map(|run| {
            let data = generate_dataset(state, &plan, count, 1_000 + run).unwrap();
            let est = estimate_covariance(&data).unwrap();
            (est.covariance.matrix() - state.matrix()).norm_squared()
        })
        .sum();
    (total / runs as f64).sqrt()
}

/// Doubling the sample count shrinks the error by about `√2`.
#[test]
fn estimator_error_scales_as_inverse_root_count() {
    let state = tmsv(0.5);
    let ratio = rms_error(&state, 2_000, 200) / rms_error(&state, 4_000, 200);
    assert!((1.25..=1.6).contains(&ratio), "ratio {ratio}");
}

/// Fraction of seeded vacuum runs whose bootstrap significance stays below 3.
fn vacuum_quiet_fraction(pick: fn(&BootstrapReport) -> Option<f64>) -> f64 {
    let vacuum = GaussianState::vacuum(2);
    let plan = default_setting_plan(2).unwrap();
    let part = ModePartition::new(vec![0], vec![1], 2).unwrap();
    let runs = 100;
    let quiet = (0..runs)
        .filter(|&run| {
            let data = generate_dataset(&vacuum, &plan, 2_000, run).unwrap();
            let cfg = BootstrapConfig { resamples: 100, seed: run, ..BootstrapConfig::default() };
            pick(&bootstrap_certify(&data, &part, &cfg).unwrap()).is_none_or(|s| s < 3.0)
        })
        .count();
    quiet as f64 / runs as f64
}

#[test]
fn vacuum_ppt_margin_is_not_significant() {
    let f = vacuum_quiet_fraction(|r| r.significance_p);
    assert!(f >= 0.99, "{f}");
}

// Vacuum is pure, so about half of all estimates are unphysical and the
// separability SDP then reports E > 0 from the unphysicality alone.
#[test]
#[ignore = "E is biased upward on boundary states; see README"]
fn vacuum_entanglement_is_not_significant() {
    let f = vacuum_quiet_fraction(|r| r.significance_e);
    assert!(f >= 0.99, "{f}");
}

#[test]
fn full_data_agrees_with_bootstrap_spread() {
    let state = tmsv(0.3);
    let plan = default_setting_plan(2).unwrap();
    let part = ModePartition::new(vec![0], vec![1], 2).unwrap();
    let data = generate_dataset(&state, &plan, 20_000, 7).unwrap();
    let rep =
        bootstrap_certify(&data, &part, &BootstrapConfig { resamples: 200, seed: 7, ..Default::default() }).unwrap();
    assert!((rep.full_e - rep.e_mean).abs() <= 3.0 * rep.e_std, "{} vs {} ± {}", rep.full_e, rep.e_mean, rep.e_std);
    assert!((rep.full_p - rep.p_mean).abs() <= 3.0 * rep.p_std, "{} vs {} ± {}", rep.full_p, rep.p_mean, rep.p_std);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampling_is_bit_reproducible(seed: u64, n in 1usize..4, setting in 0usize..4) {
        let state = random_physical_state(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let plan = default_setting_plan(n).unwrap();
        let s = &plan[setting % plan.len()];
        let a = sample_state(&state, s, 64, &mut derive(seed, Stream::Sampling, setting as u64)).unwrap();
        let b = sample_state(&state, s, 64, &mut derive(seed, Stream::Sampling, setting as u64)).unwrap();
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
