//! Property tests for the crate-wide numerical invariants.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use thermalab::hamiltonians::eigendecompose;
use thermalab::linalg::{self, CMat};
use thermalab::phaseest::{alpha_weight, outcome_distribution, PhaseEstimationConfig};
use thermalab::states::{
    dephase, gibbs_weights, partial_trace_bath, trace_distance, DensityMatrix, PureState,
};

fn random_density(d: usize, rank: usize, rng: &mut ChaCha8Rng) -> CMat {
    // Mixture of `rank` random pure states.
    let mut rho: CMat = Array2::zeros((d, d));
    let mut weights = Vec::new();
    for _ in 0..rank {
        weights.push(rng.gen::<f64>() + 0.05);
    }
    let total: f64 = weights.iter().sum();
    for w in &weights {
        let mut psi: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut psi {
            *z /= norm;
        }
        for i in 0..d {
            for j in 0..d {
                rho[[i, j]] += psi[i] * psi[j].conj() * (w / total);
            }
        }
    }
    rho
}

fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    let a: CMat = Array2::from_shape_fn((d, d), |_| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let h = (&a + &linalg::adjoint(&a)).mapv(|z| z * 0.5);
    eigendecompose(&h).unwrap().eigenvectors
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // Estimation weights over all fine values form a probability
    // distribution for any phase.
    #[test]
    fn alpha_weights_normalize(phi in 0.0f64..1.0, r in 1u32..10) {
        let total: f64 = (0..(1u64 << r)).map(|s| alpha_weight(phi, s, r)).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!((0..(1u64 << r)).all(|s| alpha_weight(phi, s, r) >= 0.0));
    }

    // Outcome windows partition the fine values.
    #[test]
    fn outcome_probabilities_normalize(seed in 0u64..1000, r in 2u32..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = 1 + (seed % r as u64) as u32;
        let mut energies: Vec<f64> = (0..24).map(|_| rng.gen::<f64>() * 3.0).collect();
        energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let min = energies[0];
        let energies: Vec<f64> = energies.iter().map(|e| e - min).collect();
        let table = outcome_distribution(&energies, &PhaseEstimationConfig::new(r, q).unwrap()).unwrap();
        let total: f64 = table.probabilities.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    // Partial trace never increases trace distance.
    #[test]
    fn partial_trace_is_contractive(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = (2usize, 3usize);
        let d = dims.0 * dims.1;
        let a = DensityMatrix::new(random_density(d, 2, &mut rng), Some(dims)).unwrap();
        let b = DensityMatrix::new(random_density(d, 3, &mut rng), Some(dims)).unwrap();
        let full = trace_distance(&a, &b).unwrap();
        let reduced = trace_distance(
            &partial_trace_bath(&a).unwrap(),
            &partial_trace_bath(&b).unwrap(),
        )
        .unwrap();
        prop_assert!(reduced <= full + 1e-12);
    }

    // Trace distance is invariant under a common unitary conjugation.
    #[test]
    fn trace_distance_unitary_invariance(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 5usize;
        let a = random_density(d, 2, &mut rng);
        let b = random_density(d, 2, &mut rng);
        let u = random_unitary(d, &mut rng);
        let rot = |m: &CMat| linalg::matmul(&linalg::matmul(&u, m), &linalg::adjoint(&u));
        let before = trace_distance(
            &DensityMatrix::new(a.clone(), None).unwrap(),
            &DensityMatrix::new(b.clone(), None).unwrap(),
        )
        .unwrap();
        let after = trace_distance(
            &DensityMatrix::new(rot(&a), None).unwrap(),
            &DensityMatrix::new(rot(&b), None).unwrap(),
        )
        .unwrap();
        prop_assert!((before - after).abs() < 1e-10);
    }

    // Dephasing is idempotent and trace preserving for random states.
    #[test]
    fn dephase_idempotent(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 6usize;
        let u = random_unitary(d, &mut rng);
        let mut vals: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let eigs = thermalab::hamiltonians::Eigensystem::new(vals, u).unwrap();
        let rho = DensityMatrix::new(random_density(d, 2, &mut rng), None).unwrap();
        let once = dephase(&rho, &eigs).unwrap();
        let twice = dephase(&once, &eigs).unwrap();
        prop_assert!(trace_distance(&once, &twice).unwrap() < 1e-11);
        prop_assert!((once.trace() - 1.0).abs() < 1e-11);
    }

    // Boltzmann weights decrease strictly with energy for beta > 0.
    #[test]
    fn gibbs_weights_monotone(seed in 0u64..1000, beta in 0.01f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut energies: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() * 2.0).collect();
        energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        energies.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let w = gibbs_weights(&energies, beta);
        for i in 1..w.len() {
            prop_assert!(w[i] < w[i - 1] + 1e-15);
        }
    }

    // Rectangular pure states carry unit norm and flat weights.
    #[test]
    fn rectangular_states_are_flat(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 8usize;
        let u = random_unitary(d, &mut rng);
        let mut vals: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let eigs = thermalab::hamiltonians::Eigensystem::new(vals.clone(), u).unwrap();
        let window = thermalab::states::EnergyWindow::new(vals[1] - 1e-12, vals[5] - vals[1]).unwrap();
        let psi = thermalab::states::rectangular_pure_state(&eigs, &window, &mut rng).unwrap();
        let d_eff = thermalab::states::effective_dimension(&psi, &eigs).unwrap();
        let count = eigs.window_range(window.lower, window.width).len() as f64;
        prop_assert!((d_eff - count).abs() < 1e-8);
    }
}

// A non-proptest regression: evolving preserves norm for many times.
#[test]
fn evolution_preserves_norm_on_a_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = 8usize;
    let u = random_unitary(d, &mut rng);
    let mut vals: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 4.0).collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let eigs = thermalab::hamiltonians::Eigensystem::new(vals, u).unwrap();
    let mut amp: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut amp {
        *z /= norm;
    }
    let psi = PureState::new(Array1::from_vec(amp), None).unwrap();
    for step in 0..40 {
        let t = step as f64 * 0.7;
        let evolved = thermalab::dynamics::evolve(&psi, &eigs, t).unwrap();
        let n: f64 = evolved.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }
}
