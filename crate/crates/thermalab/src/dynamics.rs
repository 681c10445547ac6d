//! Unitary time evolution, time-averaged subsystem distances, and Haar
//! sampling in microcanonical subspaces.
//!
//! The infinite-time average is discretized by sampling times from a
//! finite horizon; random times are the default because equispaced grids
//! can alias against rational gap ratios.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::hamiltonians::Eigensystem;
use crate::linalg::{self, CMat, CVec};
use crate::perturbation::ProjectorCensus;
use crate::states::{reduce_pure_amplitudes, DensityMatrix, EnergyWindow, PureState};
use crate::{Error, Result};

/// How sample times are drawn from `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingScheme {
    UniformRandom,
    Equispaced,
}

/// Discretization of the infinite-time average.
#[derive(Debug, Clone, Copy)]
pub struct TimeSamplingPlan {
    pub horizon: f64,
    pub samples: usize,
    pub scheme: SamplingScheme,
    pub seed: u64,
}

impl TimeSamplingPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidParameter(
                "time sampling horizon must be positive".into(),
            ));
        }
        if self.samples < 100 {
            return Err(Error::InvalidParameter(
                "time sampling needs at least 100 samples".into(),
            ));
        }
        Ok(())
    }

    /// Default plan: horizon of 100 periods of the median gap, 1000
    /// uniform-random times.
    pub fn default_for(eigs: &Eigensystem, seed: u64) -> Self {
        let gap = median_gap(&eigs.eigenvalues).max(1e-12);
        Self {
            horizon: 100.0 * std::f64::consts::TAU / gap,
            samples: 1000,
            scheme: SamplingScheme::UniformRandom,
            seed,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        match self.scheme {
            SamplingScheme::Equispaced => (0..self.samples)
                .map(|i| self.horizon * (i + 1) as f64 / self.samples as f64)
                .collect(),
            SamplingScheme::UniformRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..self.samples)
                    .map(|_| rng.gen::<f64>() * self.horizon)
                    .collect()
            }
        }
    }
}

/// Median spacing of consecutive eigenvalues.
pub fn median_gap(eigenvalues: &[f64]) -> f64 {
    let mut gaps: Vec<f64> = eigenvalues.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.is_empty() {
        return 0.0;
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gaps[gaps.len() / 2]
}

/// Numerical check of the nondegenerate-energy-gaps condition: all
/// pairwise differences `E_k - E_l` (k > l) separated by more than `tol`.
pub fn nondegenerate_gaps(eigenvalues: &[f64], tol: f64) -> bool {
    let d = eigenvalues.len();
    let mut gaps = Vec::with_capacity(d * (d - 1) / 2);
    for k in 0..d {
        for l in 0..k {
            gaps.push(eigenvalues[k] - eigenvalues[l]);
        }
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gaps.windows(2).all(|w| w[1] - w[0] > tol)
}

/// Evolve a pure state: eigenbasis amplitudes pick up `e^{-i E_k t}`.
pub fn evolve(psi0: &PureState, eigs: &Eigensystem, t: f64) -> Result<PureState> {
    if psi0.dim() != eigs.dim() {
        return Err(Error::DimensionMismatch(
            "state and eigensystem dimensions differ".into(),
        ));
    }
    let coeffs = eigenbasis_coefficients(psi0, eigs);
    let d = psi0.dim();
    let mut rotated: CVec = Array1::zeros(d);
    for k in 0..d {
        rotated[k] = coeffs[k] * Complex64::from_polar(1.0, -eigs.eigenvalues[k] * t);
    }
    let mut amplitudes: CVec = Array1::zeros(d);
    for i in 0..d {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..d {
            acc += eigs.eigenvectors[[i, k]] * rotated[k];
        }
        amplitudes[i] = acc;
    }
    PureState::new(amplitudes, psi0.dims())
}

fn eigenbasis_coefficients(psi: &PureState, eigs: &Eigensystem) -> CVec {
    let d = psi.dim();
    let mut coeffs: CVec = Array1::zeros(d);
    for k in 0..d {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            acc += eigs.eigenvectors[[i, k]].conj() * psi.amplitudes()[i];
        }
        coeffs[k] = acc;
    }
    coeffs
}

/// Mean and standard error of the sampled time series.
#[derive(Debug, Clone, Copy)]
pub struct TimeAverage {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Time-averaged trace distance between the evolving reduced state and a
/// fixed reference state on the subsystem.
///
/// Evolution is evaluated in batches through one dense transform per
/// batch; the reduction order over samples is fixed, so results are
/// deterministic for a fixed plan.
pub fn time_averaged_distance(
    psi0: &PureState,
    eigs: &Eigensystem,
    reference: &DensityMatrix,
    plan: &TimeSamplingPlan,
) -> Result<TimeAverage> {
    let series = reduced_distance_series(psi0, eigs, reference, plan)?;
    let n = series.len() as f64;
    let mean = series.iter().map(|p| p.1).sum::<f64>() / n;
    let var = series
        .iter()
        .map(|p| (p.1 - mean) * (p.1 - mean))
        .sum::<f64>()
        / (n - 1.0);
    Ok(TimeAverage {
        mean,
        std_error: (var / n).sqrt(),
        samples: series.len(),
    })
}

/// The sampled `(t, D(psi_t^S, reference))` series behind
/// [`time_averaged_distance`].
pub fn reduced_distance_series(
    psi0: &PureState,
    eigs: &Eigensystem,
    reference: &DensityMatrix,
    plan: &TimeSamplingPlan,
) -> Result<Vec<(f64, f64)>> {
    plan.validate()?;
    let dims = eigs.dims().ok_or_else(|| {
        Error::InvalidParameter("time_averaged_distance needs factorization metadata".into())
    })?;
    if reference.dim() != dims.0 {
        return Err(Error::DimensionMismatch(format!(
            "reference dimension {} vs system dimension {}",
            reference.dim(),
            dims.0
        )));
    }
    let coeffs = eigenbasis_coefficients(psi0, eigs);
    let times = plan.times();
    let distances = batched_reduced_distances(&coeffs, eigs, reference, dims, &times)?;
    Ok(times.into_iter().zip(distances).collect())
}

fn batched_reduced_distances(
    coeffs: &CVec,
    eigs: &Eigensystem,
    reference: &DensityMatrix,
    dims: (usize, usize),
    times: &[f64],
) -> Result<Vec<f64>> {
    let d = eigs.dim();
    let batch = 256usize;
    let mut distances = Vec::with_capacity(times.len());
    for chunk in times.chunks(batch) {
        let mut columns: CMat = Array2::zeros((d, chunk.len()));
        for (j, &t) in chunk.iter().enumerate() {
            for k in 0..d {
                columns[[k, j]] =
                    coeffs[k] * Complex64::from_polar(1.0, -eigs.eigenvalues[k] * t);
            }
        }
        let evolved = linalg::matmul(&eigs.eigenvectors, &columns);
        for j in 0..chunk.len() {
            let reduced = reduce_pure_amplitudes(evolved.column(j), dims);
            let diff = &reduced - reference.matrix();
            let vals = linalg::eigvalsh(&diff)?;
            distances.push(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>());
        }
    }
    Ok(distances)
}

/// Dynamic equilibration bound at the census margin:
/// `d_S / (2 sqrt(Omega_min)) + ||V||/eps + (DeltaOmega + Omega_eps) / (2 Omega_max)`.
pub fn dynamic_equilibration_bound(d_s: usize, census: &ProjectorCensus, v_norm: f64) -> Result<f64> {
    if census.omega_min == 0 {
        return Err(Error::InvalidParameter(
            "dynamic bound needs Omega_min >= 1".into(),
        ));
    }
    Ok(d_s as f64 / (2.0 * (census.omega_min as f64).sqrt())
        + crate::perturbation::window_perturbation_bound(census, v_norm)?)
}

/// Kinematic concentration threshold:
/// `2 d_S / sqrt(Omega_min) + ||V||/eps + (DeltaOmega + Omega_eps)/(2 Omega_max) + eps'`.
pub fn kinematic_threshold(
    d_s: usize,
    census: &ProjectorCensus,
    v_norm: f64,
    eps_prime: f64,
) -> Result<f64> {
    if census.omega_min == 0 {
        return Err(Error::InvalidParameter(
            "kinematic threshold needs Omega_min >= 1".into(),
        ));
    }
    Ok(2.0 * d_s as f64 / (census.omega_min as f64).sqrt()
        + crate::perturbation::window_perturbation_bound(census, v_norm)?
        + eps_prime)
}

/// Empirical tail of the kinematic statement.
#[derive(Debug, Clone, Copy)]
pub struct KinematicTail {
    /// Fraction of samples whose reduced distance exceeds the threshold.
    pub exceedance: f64,
    pub mean_distance: f64,
    pub max_distance: f64,
    pub samples: usize,
}

/// Draw Haar-random pure states from the window subspace of `h` and
/// measure the fraction whose reduced distance to `reference` exceeds
/// `threshold`.
pub fn kinematic_tail_sample(
    h: &Eigensystem,
    w: &EnergyWindow,
    reference: &DensityMatrix,
    threshold: f64,
    n_samples: usize,
    seed: u64,
) -> Result<KinematicTail> {
    if n_samples < 1 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let dims = h.dims().ok_or_else(|| {
        Error::InvalidParameter("kinematic sampling needs factorization metadata".into())
    })?;
    let range = h.window_range(w.lower, w.width);
    if range.is_empty() {
        return Err(Error::EmptyWindow {
            lower: w.lower,
            lower_plus_width: w.upper(),
        });
    }
    let block = h.column_block(range);
    let omega = block.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exceed = 0usize;
    let mut mean = 0.0;
    let mut max = 0.0_f64;
    for _ in 0..n_samples {
        // Haar measure on the subspace: normalized complex Gaussian
        // coefficients in any orthonormal basis of it.
        let mut g: CVec = Array1::zeros(omega);
        for entry in g.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *entry = Complex64::new(re, im);
        }
        let norm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for entry in g.iter_mut() {
            *entry /= norm;
        }
        let d = h.dim();
        let mut amplitudes: CVec = Array1::zeros(d);
        for (col, &coeff) in g.iter().enumerate() {
            for i in 0..d {
                amplitudes[i] += block[[i, col]] * coeff;
            }
        }
        let reduced = reduce_pure_amplitudes(amplitudes.view(), dims);
        let diff = &reduced - reference.matrix();
        let vals = linalg::eigvalsh(&diff)?;
        let dist = 0.5 * vals.iter().map(|v| v.abs()).sum::<f64>();
        mean += dist;
        max = max.max(dist);
        if dist > threshold {
            exceed += 1;
        }
    }
    Ok(KinematicTail {
        exceedance: exceed as f64 / n_samples as f64,
        mean_distance: mean / n_samples as f64,
        max_distance: max,
        samples: n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{
        build_bath, compose_h0, compose_h0_spectrum, eigendecompose, sample_coupling, BathSpec,
        CouplingModel, CouplingSpec, SystemHamiltonian,
    };
    use crate::perturbation::projector_census;
    use crate::states::{
        dephase, microcanonical_state, partial_trace_bath, rectangular_pure_state,
    };

    fn coupled_instance(
        m: usize,
        v_norm: f64,
        seed: u64,
    ) -> (Eigensystem, Eigensystem, EnergyWindow, f64) {
        let hs = SystemHamiltonian::new(1, vec![0.0, 0.5]).unwrap();
        let bath = build_bath(&BathSpec {
            m,
            eta: 1.0,
            disorder_rel: 0.05,
            seed,
        })
        .unwrap();
        let h0 = compose_h0(&hs, &bath.energies).unwrap();
        let d_b = bath.dim();
        let spectrum = compose_h0_spectrum(&hs, &bath.energies);
        let d = spectrum.dim();
        let mut h_mat: CMat = Array2::zeros((d, d));
        for (k, &(i, j)) in spectrum.labels.iter().enumerate() {
            h_mat[[i * d_b + j, i * d_b + j]] = Complex64::new(spectrum.eigenvalues[k], 0.0);
        }
        let v = sample_coupling(
            2,
            d_b,
            &CouplingSpec {
                norm_target: v_norm,
                model: CouplingModel::DenseRandom,
                seed: seed ^ 0x5555,
            },
        )
        .unwrap();
        let h = eigendecompose(&(h_mat + v))
            .unwrap()
            .with_dims(2, d_b)
            .unwrap();
        let span = h0.max_eigenvalue();
        let window = EnergyWindow::new(span * 0.35, span * 0.25).unwrap();
        (h0, h, window, v_norm)
    }

    #[test]
    fn evolve_at_zero_is_identity() {
        let (_, h, window, _) = coupled_instance(3, 0.02, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = rectangular_pure_state(&h, &window, &mut rng).unwrap();
        let evolved = evolve(&psi, &h, 0.0).unwrap();
        let overlap: Complex64 = psi
            .amplitudes()
            .iter()
            .zip(evolved.amplitudes().iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_reduced_state_is_constant() {
        let (_, h, _, _) = coupled_instance(3, 0.02, 3);
        let d = h.dim();
        let amp: CVec = Array1::from_shape_fn(d, |i| h.eigenvectors[[i, 5]]);
        let psi = PureState::new(amp, h.dims()).unwrap();
        let a = reduce_pure_amplitudes(psi.amplitudes().view(), h.dims().unwrap());
        let evolved = evolve(&psi, &h, 7.3).unwrap();
        let b = reduce_pure_amplitudes(evolved.amplitudes().view(), h.dims().unwrap());
        assert!(linalg::max_abs_diff(&a, &b) < 1e-11);
    }

    #[test]
    fn two_level_recurrence() {
        let h_mat: CMat = Array2::from_shape_fn((2, 2), |(i, j)| {
            if i == j {
                Complex64::new(i as f64 * 0.77, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let eigs = eigendecompose(&h_mat).unwrap();
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let amp: CVec = Array1::from_vec(vec![
            Complex64::new(inv, 0.0),
            Complex64::new(inv, 0.0),
        ]);
        let psi = PureState::new(amp, None).unwrap();
        let period = std::f64::consts::TAU / 0.77;
        let back = evolve(&psi, &eigs, period).unwrap();
        let overlap: Complex64 = psi
            .amplitudes()
            .iter()
            .zip(back.amplitudes().iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_and_energy_conserved() {
        let (_, h, window, _) = coupled_instance(4, 0.03, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let psi = rectangular_pure_state(&h, &window, &mut rng).unwrap();
        let e0: f64 = {
            let c = eigenbasis_coefficients(&psi, &h);
            c.iter()
                .zip(h.eigenvalues.iter())
                .map(|(z, &e)| z.norm_sqr() * e)
                .sum()
        };
        for &t in &[0.9, 17.0, 431.0] {
            let evolved = evolve(&psi, &h, t).unwrap();
            let norm: f64 = evolved.amplitudes().iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            let c = eigenbasis_coefficients(&evolved, &h);
            let e: f64 = c
                .iter()
                .zip(h.eigenvalues.iter())
                .map(|(z, &e)| z.norm_sqr() * e)
                .sum();
            assert!((e - e0).abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_initial_state_gives_zero_average() {
        // V = 0 and a product eigenstate: the reduced state never moves.
        let hs = SystemHamiltonian::new(1, vec![0.0, 0.5]).unwrap();
        let bath = build_bath(&BathSpec {
            m: 3,
            eta: 1.0,
            disorder_rel: 0.05,
            seed: 8,
        })
        .unwrap();
        let h0 = compose_h0(&hs, &bath.energies).unwrap();
        let d = h0.dim();
        let amp: CVec = Array1::from_shape_fn(d, |i| h0.eigenvectors[[i, 3]]);
        let psi = PureState::new(amp, h0.dims()).unwrap();
        let omega = dephase(&psi.density(), &h0).unwrap();
        let reference = partial_trace_bath(&omega).unwrap();
        let plan = TimeSamplingPlan {
            horizon: 50.0,
            samples: 120,
            scheme: SamplingScheme::UniformRandom,
            seed: 9,
        };
        let avg = time_averaged_distance(&psi, &h0, &reference, &plan).unwrap();
        assert!(avg.mean < 1e-11, "mean {}", avg.mean);
    }

    #[test]
    fn isolated_superposition_does_not_equilibrate() {
        // A bare two-level system (no bath): distance stays bounded away
        // from zero for most times.
        let h_mat: CMat = Array2::from_shape_fn((2, 2), |(i, j)| {
            if i == j {
                Complex64::new(i as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let eigs = eigendecompose(&h_mat).unwrap().with_dims(2, 1).unwrap();
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let amp: CVec = Array1::from_vec(vec![
            Complex64::new(inv, 0.0),
            Complex64::new(inv, 0.0),
        ]);
        let psi = PureState::new(amp, Some((2, 1))).unwrap();
        let omega = dephase(&psi.density(), &eigs).unwrap();
        let reference = partial_trace_bath(&omega).unwrap();
        let plan = TimeSamplingPlan {
            horizon: 200.0,
            samples: 400,
            scheme: SamplingScheme::UniformRandom,
            seed: 10,
        };
        let avg = time_averaged_distance(&psi, &eigs, &reference, &plan).unwrap();
        assert!(avg.mean > 0.2, "mean {}", avg.mean);
    }

    #[test]
    fn rectangular_state_obeys_dynamic_bound() {
        let (h0, h, window, v_norm) = coupled_instance(6, 0.005, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let psi = rectangular_pure_state(&h, &window, &mut rng).unwrap();
        let reference =
            partial_trace_bath(&microcanonical_state(&h0, &window).unwrap()).unwrap();
        let plan = TimeSamplingPlan {
            horizon: 2000.0,
            samples: 400,
            scheme: SamplingScheme::UniformRandom,
            seed: 13,
        };
        let avg = time_averaged_distance(&psi, &h, &reference, &plan).unwrap();
        // Grid-optimal epsilon.
        let mut best = f64::INFINITY;
        for eps in crate::perturbation::epsilon_log_grid(1e-4, window.width, 16) {
            let census = projector_census(&h0, &h, &window, eps).unwrap();
            let bound = dynamic_equilibration_bound(2, &census, v_norm).unwrap();
            best = best.min(bound);
        }
        assert!(
            avg.mean <= best,
            "time-averaged distance {} above bound {best}",
            avg.mean
        );
    }

    #[test]
    fn kinematic_tail_is_empty_at_loose_threshold() {
        let (h0, h, window, _) = coupled_instance(5, 0.01, 14);
        let reference =
            partial_trace_bath(&microcanonical_state(&h0, &window).unwrap()).unwrap();
        let tail = kinematic_tail_sample(&h, &window, &reference, 1.0, 50, 15).unwrap();
        assert_eq!(tail.exceedance, 0.0);
        assert!(tail.max_distance <= 1.0 + 1e-12);
    }

    #[test]
    fn haar_mean_converges_to_microcanonical() {
        let (_, h, window, _) = coupled_instance(5, 0.01, 16);
        let reference_h =
            partial_trace_bath(&microcanonical_state(&h, &window).unwrap()).unwrap();
        let dims = h.dims().unwrap();
        let range = h.window_range(window.lower, window.width);
        let block = h.column_block(range);
        let omega = block.ncols();
        let distance_for = |n_samples: usize, seed: u64| -> f64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut mean: CMat = Array2::zeros((dims.0, dims.0));
            for _ in 0..n_samples {
                let mut g: CVec = Array1::zeros(omega);
                for entry in g.iter_mut() {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *entry = Complex64::new(re, im);
                }
                let norm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let d = h.dim();
                let mut amplitudes: CVec = Array1::zeros(d);
                for (col, &coeff) in g.iter().enumerate() {
                    for i in 0..d {
                        amplitudes[i] += block[[i, col]] * coeff / norm;
                    }
                }
                mean = mean + reduce_pure_amplitudes(amplitudes.view(), dims);
            }
            let scale = Complex64::new(1.0 / n_samples as f64, 0.0);
            mean.mapv_inplace(|z| z * scale);
            let diff = &mean - reference_h.matrix();
            let vals = linalg::eigvalsh(&diff).unwrap();
            0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()
        };
        // 16x the samples: the empirical-mean distance should drop by
        // roughly 4x; assert the direction with headroom for noise.
        let coarse = distance_for(50, 77);
        let fine = distance_for(800, 78);
        assert!(
            fine < 0.6 * coarse,
            "empirical mean did not improve: {coarse} -> {fine}"
        );
    }

    #[test]
    fn single_level_window_is_deterministic() {
        let (_, h, _, _) = coupled_instance(4, 0.02, 18);
        let e = h.eigenvalues[7];
        let gap_lo = h.eigenvalues[7] - h.eigenvalues[6];
        let gap_hi = h.eigenvalues[8] - h.eigenvalues[7];
        let w = EnergyWindow::new(e - 0.25 * gap_lo, 0.25 * gap_lo + 0.25 * gap_hi).unwrap();
        let reference = partial_trace_bath(&microcanonical_state(&h, &w).unwrap()).unwrap();
        let tail = kinematic_tail_sample(&h, &w, &reference, 1e-9, 20, 19).unwrap();
        // All samples are the same eigenstate up to phase.
        assert_eq!(tail.exceedance, 0.0);
        assert!(tail.max_distance < 1e-10);
    }

    #[test]
    fn gap_checks() {
        assert!(nondegenerate_gaps(&[0.0, 1.0, 2.5, 4.7], 1e-9));
        assert!(!nondegenerate_gaps(&[0.0, 1.0, 2.0, 4.7], 1e-9));
        assert!((median_gap(&[0.0, 1.0, 3.0]) - 2.0).abs() < 1e-15);
    }
}
