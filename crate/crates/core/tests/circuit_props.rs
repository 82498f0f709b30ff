use becv::circuit::{
    apply_gates, apply_loss, simulate_circuit, source_state, CircuitSpec, GateSpec, LossSpec, PhaseGateSpec, SourceSpec,
};
use becv::gaussian::{physicality_margin, symplectic_eigenvalues};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::random_physical_state;

fn random_sources<R: Rng>(n: usize, rng: &mut R) -> Vec<SourceSpec> {
    (0..n)
        .map(|_| {
            let v_min: f64 = rng.random_range(0.3..2.0);
            let v_max = rng.random_range((1.0 / v_min).max(v_min)..6.0);
            SourceSpec::squeezed_thermal(v_min, v_max).with_orientation(rng.random_range(-90.0..90.0))
        })
        .collect()
}

fn random_gates<R: Rng>(n: usize, count: usize, rng: &mut R) -> Vec<GateSpec> {
    (0..count)
        .map(|_| {
            if n == 1 || rng.random_bool(0.3) {
                GateSpec::Rotation { mode: rng.random_range(0..n), angle_deg: rng.random_range(0.0..360.0) }
            } else {
                let i = rng.random_range(0..n);
                let j = (i + rng.random_range(1..n)) % n;
                GateSpec::PhaseGate(PhaseGateSpec::new(i, j, rng.random_range(0.0..=1.0), rng.random_range(0.0..360.0)))
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn passive_gates_keep_symplectic_spectrum(seed: u64, n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = source_state(&random_sources(n, &mut rng)).unwrap();
        let output = apply_gates(&input, &random_gates(n, 8, &mut rng)).unwrap();
        let a = symplectic_eigenvalues(&input).unwrap();
        let b = symplectic_eigenvalues(&output).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn circuit_outputs_are_physical(seed: u64, n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let losses = (0..n).map(|mode| LossSpec { mode, efficiency: rng.random_range(0.0..=1.0) }).collect();
        let spec = CircuitSpec {
            sources: random_sources(n, &mut rng),
            gates: random_gates(n, 6, &mut rng),
            losses,
            partition: None,
        };
        prop_assert!(physicality_margin(&simulate_circuit(&spec).unwrap()) >= -1e-9);
    }

    #[test]
    fn loss_composes(seed: u64, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_physical_state(n, &mut rng);
        let mode = rng.random_range(0..n);
        let (e1, e2) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        let both = apply_loss(&state, &LossSpec { mode, efficiency: e1 * e2 }).unwrap();
        let step = apply_loss(&apply_loss(&state, &LossSpec { mode, efficiency: e2 }).unwrap(), &LossSpec { mode, efficiency: e1 }).unwrap();
        prop_assert!((both.matrix() - step.matrix()).abs().max() < 1e-12);
    }

    #[test]
    fn uniform_loss_never_raises_total_noise(seed: u64, n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_physical_state(n, &mut rng);
        prop_assume!(state.matrix().trace() >= 2.0 * n as f64);
        let eta = rng.random_range(0.0..=1.0);
        let mut lossy = state.clone();
        for mode in 0..n {
            lossy = apply_loss(&lossy, &LossSpec { mode, efficiency: eta }).unwrap();
        }
        prop_assert!(lossy.matrix().trace() <= state.matrix().trace() + 1e-12);
    }
}
