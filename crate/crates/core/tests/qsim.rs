mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smcm::cloud::{deterministic_step, FractionVector, StochasticMatrix};
use smcm::lcu::{decompose, decompose_transition};
use smcm::qsim::*;

use common::{reference_matrix, simplex};

/// `(1/2) M x` for the unit-length `x`.
fn half_apply(m: &smcm::linalg::ComplexMatrix, sigma: &FractionVector) -> Vec<Complex64> {
    let x: Vec<Complex64> = sigma.unit_amplitudes().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    m.apply(&x).into_iter().map(|z| z * 0.5).collect()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn circuit_has_nine_gates_in_order() {
    let lcu = decompose_transition(&reference_matrix(0.1)).unwrap();
    let c = build_smcm_circuit(&FractionVector::uniform(), &lcu).unwrap();
    assert_eq!(c.len(), 9);
    let g = &c.gates;
    assert_eq!(g[0].targets(), &[Qubit::A0]);
    assert_eq!(g[1].targets(), &[Qubit::A1]);
    assert_eq!(g[2].targets(), &[Qubit::Q0, Qubit::Q1]);
    assert!(g[2].controls().is_empty());
    let patterns: Vec<_> = g[3..7].iter().map(|x| x.controls().to_vec()).collect();
    assert_eq!(
        patterns,
        vec![
            vec![(Qubit::A0, false), (Qubit::A1, false)],
            vec![(Qubit::A0, false), (Qubit::A1, true)],
            vec![(Qubit::A0, true), (Qubit::A1, false)],
            vec![(Qubit::A0, true), (Qubit::A1, true)],
        ]
    );
    for (j, gate) in g[3..7].iter().enumerate() {
        assert_eq!(gate.matrix(), lcu.f(j + 1));
    }
    assert_eq!(g[7].targets(), &[Qubit::A0]);
    assert_eq!(g[8].targets(), &[Qubit::A1]);
}

#[test]
fn identity_dynamics_keeps_sigma() {
    let lcu = decompose(&StochasticMatrix::identity().to_complex()).unwrap();
    let sigma = FractionVector::new([0.1, 0.2, 0.3, 0.4]).unwrap();
    let state = build_smcm_circuit(&sigma, &lcu).unwrap().run();
    let block = state.block(0);
    let expected: Vec<Complex64> = sigma.unit_amplitudes().iter().map(|&v| Complex64::new(0.5 * v, 0.0)).collect();
    assert!(max_diff(&block, &expected) < 1e-12);
    assert!((analytic_probabilities(&state)[..4].iter().sum::<f64>() - 0.25).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let out = quantum_step(&sigma, &lcu, 1_000_000, &mut rng).unwrap();
    assert!(out.sigma.max_abs_diff(&sigma) < 0.01);
    // Binomial sd of the postselection rate is ~4.3e-4 at 10^6 shots.
    assert!((out.postselect_rate - 0.25).abs() < 5.0 * 4.34e-4);
}

#[test]
fn born_probabilities_match_closed_form_at_reference() {
    let p = reference_matrix(0.1);
    let lcu = decompose_transition(&p).unwrap();
    let sigma = FractionVector::uniform();
    let state = build_smcm_circuit(&sigma, &lcu).unwrap().run();
    let probs = analytic_probabilities(&state);
    let closed = ancilla00_probabilities(&p, lcu.scale(), &sigma);
    for k in 0..4 {
        assert!((probs[k] - closed[k]).abs() < 1e-10);
    }
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
}

#[test]
fn uniform_superposition_sampling_within_five_sigma() {
    let mut amps = [Complex64::new(0.25, 0.0); DIM];
    amps[3] = Complex64::new(0.0, 0.25);
    let state = Statevector::from_amplitudes(amps).unwrap();
    let n = 160_000u64;
    let counts = sample_shots(&state, n, &mut ChaCha8Rng::seed_from_u64(2024));
    let p = 1.0 / 16.0;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    for c in counts.counts {
        assert!((c as f64 - 10_000.0).abs() < 5.0 * sd, "count {c}");
    }
}

#[test]
fn empirical_frequencies_converge_to_born_rule() {
    let p = reference_matrix(0.1);
    let lcu = decompose_transition(&p).unwrap();
    let sigma = FractionVector::new([0.4, 0.3, 0.2, 0.1]).unwrap();
    let state = build_smcm_circuit(&sigma, &lcu).unwrap().run();
    let probs = analytic_probabilities(&state);
    let n = 200_000u64;
    let counts = sample_shots(&state, n, &mut ChaCha8Rng::seed_from_u64(77));
    for (c, p) in counts.counts.iter().zip(probs) {
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((*c as f64 - n as f64 * p).abs() <= 5.0 * sd + 1e-9);
    }
}

#[test]
fn reference_postselection_rate() {
    let p = reference_matrix(0.1);
    let lcu = decompose_transition(&p).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let out = quantum_step(&FractionVector::uniform(), &lcu, 100_000, &mut rng).unwrap();
    assert!((out.postselect_rate - 0.25).abs() < 0.02);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn circuit_stage_structure(sigma in simplex()) {
        let p = reference_matrix(0.1);
        let lcu = decompose_transition(&p).unwrap();
        let circuit = build_smcm_circuit(&sigma, &lcu).unwrap();

        let mut state = Statevector::zero();
        for g in &circuit.gates {
            state.apply(g);
            prop_assert!((state.norm() - 1.0).abs() < 1e-10);
        }

        let stages = circuit.run_stages();
        let unit: Vec<Complex64> = sigma.unit_amplitudes().iter().map(|&v| Complex64::new(v * 0.5, 0.0)).collect();
        for anc in 0..4 {
            prop_assert!(max_diff(&stages[0].block(anc), &unit) < 1e-12);
            prop_assert!(max_diff(&stages[1].block(anc), &half_apply(lcu.f(anc + 1), &sigma)) < 1e-10);
        }
        prop_assert!(max_diff(&stages[2].block(0), &half_apply(&lcu.encoded(), &sigma)) < 1e-10);
        prop_assert_eq!(&stages[2], &state);
    }

    #[test]
    fn exact_decode_equals_deterministic_step(sigma in simplex()) {
        let p = reference_matrix(0.1);
        let lcu = decompose_transition(&p).unwrap();
        let quantum = quantum_step_exact(&sigma, &lcu).unwrap();
        prop_assert!(quantum.sigma.max_abs_diff(&deterministic_step(&p, &sigma)) < 1e-10);
    }

    #[test]
    fn sampling_is_reproducible(sigma in simplex(), seed in any::<u64>()) {
        let lcu = decompose_transition(&reference_matrix(0.1)).unwrap();
        let state = build_smcm_circuit(&sigma, &lcu).unwrap().run();
        let a = sample_shots(&state, 2000, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = sample_shots(&state, 2000, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(a.counts.iter().sum::<u64>(), 2000);
        prop_assert_eq!(a, b);
    }
}
