//! Gibbs, microcanonical/dephased, and rectangular states; partial
//! traces and trace distances.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::hamiltonians::{Eigensystem, SystemHamiltonian};
use crate::linalg::{self, CMat, CVec};
use crate::{Error, Result};

const HERMITICITY_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;

/// Half-open energy interval `[lower, lower + width)`.
///
/// Half-open membership makes adjacent windows partition the spectrum;
/// degenerate eigenvalues exactly at an edge are resolved by the rule on
/// their floating-point value, which is edge-sensitive by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWindow {
    pub lower: f64,
    pub width: f64,
}

impl EnergyWindow {
    pub fn new(lower: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !lower.is_finite() || !width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "energy window needs finite lower edge and positive width, got [{lower}, {lower}+{width})"
            )));
        }
        Ok(Self { lower, width })
    }

    pub fn upper(&self) -> f64 {
        self.lower + self.width
    }

    pub fn contains(&self, e: f64) -> bool {
        self.lower <= e && e < self.upper()
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix with optional
/// system x bath factorization metadata.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMat,
    dims: Option<(usize, usize)>,
}

impl DensityMatrix {
    /// Validating constructor: Hermiticity and unit trace are checked
    /// here; positivity is checked by [`DensityMatrix::validate_full`]
    /// (it costs a full eigensolve).
    pub fn new(matrix: CMat, dims: Option<(usize, usize)>) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d {
            return Err(Error::DimensionMismatch(
                "density matrix must be square".into(),
            ));
        }
        if let Some((ds, db)) = dims {
            if ds * db != d {
                return Err(Error::DimensionMismatch(format!(
                    "dims ({ds}, {db}) do not factor dimension {d}"
                )));
            }
        }
        let herm = linalg::hermiticity_error(&matrix);
        if herm > HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                deviation: herm,
                tolerance: HERMITICITY_TOL,
            });
        }
        let trace: f64 = (0..d).map(|i| matrix[[i, i]].re).sum();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace is {trace}, expected 1"
            )));
        }
        Ok(Self { matrix, dims })
    }

    /// Diagonal state from nonnegative weights (renormalized).
    pub fn from_diagonal(weights: &[f64], dims: Option<(usize, usize)>) -> Result<Self> {
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "diagonal weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter(
                "diagonal weights must have positive total".into(),
            ));
        }
        let d = weights.len();
        let mut m: CMat = Array2::zeros((d, d));
        for i in 0..d {
            m[[i, i]] = Complex64::new(weights[i] / total, 0.0);
        }
        Self::new(m, dims)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.dims
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[[i, i]].re).sum()
    }

    /// Spectrum of the state, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::eigvalsh(&self.matrix)
    }

    /// Full invariant check including positivity.
    pub fn validate_full(&self) -> Result<()> {
        let vals = self.eigenvalues()?;
        if vals[0] < -PSD_TOL {
            return Err(Error::InvalidParameter(format!(
                "density matrix has negative eigenvalue {}",
                vals[0]
            )));
        }
        Ok(())
    }

    /// Von Neumann rank: eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> Result<usize> {
        Ok(self.eigenvalues()?.iter().filter(|&&v| v > tol).count())
    }
}

/// Pure state vector with optional factorization metadata.
#[derive(Debug, Clone)]
pub struct PureState {
    amplitudes: CVec,
    dims: Option<(usize, usize)>,
}

impl PureState {
    pub fn new(amplitudes: CVec, dims: Option<(usize, usize)>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "pure state norm is {norm}, expected 1"
            )));
        }
        if let Some((ds, db)) = dims {
            if ds * db != amplitudes.len() {
                return Err(Error::DimensionMismatch(format!(
                    "dims ({ds}, {db}) do not factor dimension {}",
                    amplitudes.len()
                )));
            }
        }
        Ok(Self { amplitudes, dims })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.dims
    }

    /// Projector |psi><psi| as a density matrix.
    pub fn density(&self) -> DensityMatrix {
        let d = self.dim();
        let m = Array2::from_shape_fn((d, d), |(i, j)| {
            self.amplitudes[i] * self.amplitudes[j].conj()
        });
        DensityMatrix {
            matrix: m,
            dims: self.dims,
        }
    }
}

/// Canonical state `exp(-beta H_S) / Z` of the subsystem.
///
/// Weights are computed with the ground energy subtracted first, so
/// large `beta` underflows gracefully instead of overflowing.
pub fn gibbs_state(hs: &SystemHamiltonian, beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "gibbs_state needs finite beta >= 0, got {beta}"
        )));
    }
    let weights = gibbs_weights(hs.energies(), beta);
    let d = hs.dim();
    let mut m: CMat = Array2::zeros((d, d));
    for i in 0..d {
        m[[i, i]] = Complex64::new(weights[i], 0.0);
    }
    let m = match hs.basis() {
        None => m,
        Some(u) => linalg::matmul(&linalg::matmul(u, &m), &linalg::adjoint(u)),
    };
    DensityMatrix::new(m, Some((d, 1)))
}

/// Normalized Boltzmann weights `exp(-beta E_k) / Z` with max-shift.
pub fn gibbs_weights(energies: &[f64], beta: f64) -> Vec<f64> {
    let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.iter().map(|w| w / z).collect()
}

/// Equal-weight mixture of the eigenvectors inside the window.
pub fn microcanonical_state(eigs: &Eigensystem, w: &EnergyWindow) -> Result<DensityMatrix> {
    let range = eigs.window_range(w.lower, w.width);
    if range.is_empty() {
        return Err(Error::EmptyWindow {
            lower: w.lower,
            lower_plus_width: w.upper(),
        });
    }
    let count = range.len();
    let block = eigs.column_block(range);
    let mut m = linalg::matmul(&block, &linalg::adjoint(&block));
    let scale = Complex64::new(1.0 / count as f64, 0.0);
    m.mapv_inplace(|z| z * scale);
    DensityMatrix::new(m, eigs.dims())
}

/// Rectangular pure state: equal weight `1/Omega` on every eigenvector
/// in the window, with i.i.d. uniform phases.
pub fn rectangular_pure_state(
    eigs: &Eigensystem,
    w: &EnergyWindow,
    rng: &mut ChaCha8Rng,
) -> Result<PureState> {
    let range = eigs.window_range(w.lower, w.width);
    if range.is_empty() {
        return Err(Error::EmptyWindow {
            lower: w.lower,
            lower_plus_width: w.upper(),
        });
    }
    let count = range.len();
    let amp = (1.0 / count as f64).sqrt();
    let d = eigs.dim();
    let mut amplitudes: CVec = Array1::zeros(d);
    for k in range {
        let theta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let coeff = Complex64::from_polar(amp, theta);
        for i in 0..d {
            amplitudes[i] += coeff * eigs.eigenvectors[[i, k]];
        }
    }
    PureState::new(amplitudes, eigs.dims())
}

/// Remove coherences in the eigenbasis:
/// `omega = sum_k |E_k><E_k| rho |E_k><E_k|`.
pub fn dephase(rho: &DensityMatrix, eigs: &Eigensystem) -> Result<DensityMatrix> {
    if rho.dim() != eigs.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} vs eigensystem dimension {}",
            rho.dim(),
            eigs.dim()
        )));
    }
    let u = &eigs.eigenvectors;
    let in_basis = linalg::matmul(&linalg::adjoint_matmul(u, rho.matrix()), u);
    let d = rho.dim();
    let mut diag: CMat = Array2::zeros((d, d));
    for k in 0..d {
        diag[[k, k]] = Complex64::new(in_basis[[k, k]].re, 0.0);
    }
    let m = linalg::matmul(&linalg::matmul(u, &diag), &linalg::adjoint(u));
    DensityMatrix::new(m, rho.dims())
}

/// Diagonal weights of a state in the given eigenbasis, `<E_k|rho|E_k>`.
pub fn eigenbasis_populations(rho: &DensityMatrix, eigs: &Eigensystem) -> Result<Vec<f64>> {
    if rho.dim() != eigs.dim() {
        return Err(Error::DimensionMismatch(
            "state and eigensystem dimensions differ".into(),
        ));
    }
    let d = rho.dim();
    let u = &eigs.eigenvectors;
    let mut pops = Vec::with_capacity(d);
    for k in 0..d {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                row += rho.matrix()[[i, j]] * u[[j, k]];
            }
            acc += u[[i, k]].conj() * row;
        }
        pops.push(acc.re);
    }
    Ok(pops)
}

/// Trace out the bath factor.
pub fn partial_trace_bath(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let (d_s, d_b) = rho.dims().ok_or_else(|| {
        Error::InvalidParameter("partial trace needs factorization metadata (dims)".into())
    })?;
    let mut out: CMat = Array2::zeros((d_s, d_s));
    for a in 0..d_s {
        for b in 0..d_s {
            let mut acc = Complex64::new(0.0, 0.0);
            for q in 0..d_b {
                acc += rho.matrix()[[a * d_b + q, b * d_b + q]];
            }
            out[[a, b]] = acc;
        }
    }
    DensityMatrix::new(out, Some((d_s, 1)))
}

/// Reduced system matrix of a pure state without materializing the full
/// projector: `rho^S[a, b] = sum_q psi[(a, q)] conj(psi[(b, q)])`.
pub fn reduce_pure_amplitudes(amplitudes: ndarray::ArrayView1<'_, Complex64>, dims: (usize, usize)) -> CMat {
    let (d_s, d_b) = dims;
    let mut out: CMat = Array2::zeros((d_s, d_s));
    for a in 0..d_s {
        for b in 0..d_s {
            let mut acc = Complex64::new(0.0, 0.0);
            for q in 0..d_b {
                acc += amplitudes[a * d_b + q] * amplitudes[b * d_b + q].conj();
            }
            out[[a, b]] = acc;
        }
    }
    out
}

/// Trace distance `(1/2) ||a - b||_1` via a full Hermitian
/// eigendecomposition of the difference.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "trace distance needs equal dimensions, got {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let diff = a.matrix() - b.matrix();
    let vals = linalg::eigvalsh(&diff)?;
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

/// Trace distance of two commuting (diagonal) spectra:
/// `(1/2) sum_k |p_k - q_k|`.
pub fn trace_distance_diagonal(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "diagonal distance needs equal lengths");
    0.5 * p
        .iter()
        .zip(q.iter())
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
}

/// Effective dimension `1 / sum_k |<E_k|psi>|^4`.
pub fn effective_dimension(psi: &PureState, eigs: &Eigensystem) -> Result<f64> {
    if psi.dim() != eigs.dim() {
        return Err(Error::DimensionMismatch(
            "state and eigensystem dimensions differ".into(),
        ));
    }
    let d = psi.dim();
    let mut inverse_participation = 0.0;
    for k in 0..d {
        let mut c = Complex64::new(0.0, 0.0);
        for i in 0..d {
            c += eigs.eigenvectors[[i, k]].conj() * psi.amplitudes()[i];
        }
        inverse_participation += c.norm_sqr() * c.norm_sqr();
    }
    Ok(1.0 / inverse_participation)
}
