//! System, bath, uncoupled, and coupled Hamiltonians and their
//! eigensystems.
//!
//! The bath is a set of `m` noninteracting spin-1/2 particles whose local
//! excitation energies are drawn from a normal distribution around `eta`;
//! the disorder lifts the binomial degeneracies so the counting arguments
//! have a smooth density of states to work with. Spectra of composed
//! Hamiltonians are shifted so the ground state sits at zero, which keeps
//! phase-estimation phases in `[0, 1)`.

use ndarray::{s, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{self, CMat};
use crate::{Error, Result};

/// Memory guard for bath construction (2^m levels are enumerated).
pub const DEFAULT_BATH_SPIN_CAP: usize = 20;

/// Memory guard for dense eigenvector materialization.
pub const DEFAULT_DENSE_DIM_CAP: usize = 1 << 14;

// ---------------------------------------------------------------------
// System Hamiltonian
// ---------------------------------------------------------------------

/// Subsystem Hamiltonian given by its spectrum, optionally conjugated by
/// a basis unitary (default: diagonal in the computational basis).
#[derive(Debug, Clone)]
pub struct SystemHamiltonian {
    n: usize,
    energies: Vec<f64>,
    basis: Option<CMat>,
}

impl SystemHamiltonian {
    /// Build from a qubit count and 2^n energies. Energies are sorted
    /// ascending.
    pub fn new(n: usize, mut energies: Vec<f64>) -> Result<Self> {
        let d = 1usize << n;
        if energies.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "system with {n} qubits needs {d} energies, got {}",
                energies.len()
            )));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter(
                "system energies must be finite".into(),
            ));
        }
        energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self {
            n,
            energies,
            basis: None,
        })
    }

    /// Attach a basis unitary (columns are the eigenvectors).
    pub fn with_basis(mut self, basis: CMat) -> Result<Self> {
        let d = self.dim();
        if basis.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "basis must be {d}x{d}, got {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let overlap = linalg::adjoint_matmul(&basis, &basis);
        if linalg::max_abs_diff(&overlap, &linalg::identity(d)) > 1e-10 {
            return Err(Error::InvalidParameter("basis is not unitary".into()));
        }
        self.basis = Some(basis);
        Ok(self)
    }

    /// Random spectrum on `[0, norm]` with the ground state pinned at 0
    /// and the top level pinned at `norm`.
    pub fn random(n: usize, norm: f64, rng: &mut ChaCha8Rng) -> Self {
        let d = 1usize << n;
        let mut energies: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if d == 1 {
            return Self {
                n,
                energies: vec![0.0],
                basis: None,
            };
        }
        let lo = energies[0];
        let span = energies[d - 1] - lo;
        let energies = energies
            .iter()
            .map(|e| if span > 0.0 { (e - lo) / span * norm } else { 0.0 })
            .collect();
        Self {
            n,
            energies,
            basis: None,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Operator norm, `max |E_k|`.
    pub fn norm_inf(&self) -> f64 {
        self.energies.iter().fold(0.0_f64, |a, &e| a.max(e.abs()))
    }

    pub fn basis(&self) -> Option<&CMat> {
        self.basis.as_ref()
    }

    /// Dense matrix representation.
    pub fn matrix(&self) -> CMat {
        let d = self.dim();
        let diag = Array2::from_shape_fn((d, d), |(i, j)| {
            if i == j {
                Complex64::new(self.energies[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        match &self.basis {
            None => diag,
            Some(u) => linalg::matmul(&linalg::matmul(u, &diag), &linalg::adjoint(u)),
        }
    }
}

// ---------------------------------------------------------------------
// Bath
// ---------------------------------------------------------------------

/// Disordered spin bath: `m` noninteracting spin-1/2 particles with
/// normally distributed local fields of mean `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub m: usize,
    pub eta: f64,
    pub disorder_rel: f64,
    pub seed: u64,
}

impl BathSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidParameter("bath needs m >= 1 spins".into()));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter("bath eta must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.disorder_rel) {
            return Err(Error::InvalidParameter(
                "disorder_rel must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1usize << self.m
    }

    /// Idealized bath norm `eta * m` used by the closed-form bounds.
    pub fn model_norm(&self) -> f64 {
        self.eta * self.m as f64
    }
}

/// A realized bath: per-site fields and the full spectrum with the
/// ground energy shifted to zero. `energies` is sorted ascending;
/// `configuration_energies[b]` carries the same values indexed by the
/// excitation bit pattern `b` (site `j` = bit `j`), which is the
/// ordering the gate-level register uses.
#[derive(Debug, Clone)]
pub struct Bath {
    pub spec: BathSpec,
    pub site_fields: Vec<f64>,
    pub energies: Vec<f64>,
    pub configuration_energies: Vec<f64>,
}

impl Bath {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Largest eigenvalue of the realized (shifted) bath.
    pub fn norm_inf(&self) -> f64 {
        *self.energies.last().unwrap()
    }
}

/// Construct the disordered spin bath spectrum.
pub fn build_bath(spec: &BathSpec) -> Result<Bath> {
    build_bath_with_cap(spec, DEFAULT_BATH_SPIN_CAP)
}

/// As [`build_bath`], additionally rescaling the realized fields so the
/// total excitation energy is exactly `eta * m`.
///
/// The plain ensemble draw leaves the realized mean field wandering by
/// `O(disorder_rel / sqrt(m))`, which shifts the center of the realized
/// density of states off the smoothed profile; pinning the mean removes
/// that wander while keeping the degeneracy lifting. Counting and
/// preparation experiments compare realizations against the profile, so
/// they use this variant.
pub fn build_bath_normalized(spec: &BathSpec) -> Result<Bath> {
    let mut bath = build_bath(spec)?;
    let total: f64 = bath.site_fields.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter(
            "bath fields sum to a nonpositive total; change the seed".into(),
        ));
    }
    let scale = spec.model_norm() / total;
    for h in &mut bath.site_fields {
        *h *= scale;
    }
    let mut configuration_energies = vec![0.0_f64];
    for &h in &bath.site_fields {
        let mut next = Vec::with_capacity(configuration_energies.len() * 2);
        next.extend_from_slice(&configuration_energies);
        next.extend(configuration_energies.iter().map(|e| e + h));
        configuration_energies = next;
    }
    let ground = configuration_energies
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    for e in &mut configuration_energies {
        *e -= ground;
    }
    let mut energies = configuration_energies.clone();
    energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bath.energies = energies;
    bath.configuration_energies = configuration_energies;
    Ok(bath)
}

/// As [`build_bath`] with an explicit spin-count cap.
pub fn build_bath_with_cap(spec: &BathSpec, cap: usize) -> Result<Bath> {
    spec.validate()?;
    if spec.m > cap {
        return Err(Error::ResourceCap(format!(
            "bath with m = {} spins exceeds the cap of {cap} (2^m levels are enumerated)",
            spec.m
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sigma = spec.disorder_rel * spec.eta;
    let site_fields: Vec<f64> = (0..spec.m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.eta + sigma * z
        })
        .collect();

    // Spectrum by iterated doubling over sites: entry b of the result is
    // the sum over the bits of b of the site fields, so the list is in
    // configuration order (site j = bit j).
    let mut configuration_energies = vec![0.0_f64];
    for &h in &site_fields {
        let mut next = Vec::with_capacity(configuration_energies.len() * 2);
        next.extend_from_slice(&configuration_energies);
        next.extend(configuration_energies.iter().map(|e| e + h));
        configuration_energies = next;
    }
    let ground = configuration_energies
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    for e in &mut configuration_energies {
        *e -= ground;
    }
    let mut energies = configuration_energies.clone();
    energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(Bath {
        spec: *spec,
        site_fields,
        energies,
        configuration_energies,
    })
}

// ---------------------------------------------------------------------
// Eigensystems
// ---------------------------------------------------------------------

/// Eigenvalues (ascending) and eigenvector columns of a Hermitian
/// operator, with optional system/bath factorization metadata.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
    dims: Option<(usize, usize)>,
}

impl Eigensystem {
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: CMat) -> Result<Self> {
        let d = eigenvalues.len();
        if eigenvectors.dim() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "eigenvector matrix must be {d}x{d}"
            )));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter(
                "eigenvalues must be nondecreasing".into(),
            ));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            dims: None,
        })
    }

    /// Attach system/bath factorization metadata.
    pub fn with_dims(mut self, d_s: usize, d_b: usize) -> Result<Self> {
        if d_s * d_b != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "dims ({d_s}, {d_b}) do not factor dimension {}",
                self.dim()
            )));
        }
        self.dims = Some((d_s, d_b));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.dims
    }

    /// Operator norm, `max |lambda|`.
    pub fn norm_inf(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0_f64, |a, &v| a.max(v.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// Same eigenvectors with the spectrum shifted so the minimum is 0.
    pub fn shifted_to_zero(&self) -> Self {
        let min = self.min_eigenvalue();
        Self {
            eigenvalues: self.eigenvalues.iter().map(|v| v - min).collect(),
            eigenvectors: self.eigenvectors.clone(),
            dims: self.dims,
        }
    }

    /// Indices of eigenvalues in the half-open window `[lower, lower+width)`.
    pub fn window_range(&self, lower: f64, width: f64) -> std::ops::Range<usize> {
        let start = self.eigenvalues.partition_point(|&v| v < lower);
        let end = self.eigenvalues.partition_point(|&v| v < lower + width);
        start..end
    }

    /// View of the eigenvector columns in `range`.
    pub fn column_block(&self, range: std::ops::Range<usize>) -> CMat {
        self.eigenvectors.slice(s![.., range]).to_owned()
    }

    /// Max deviation of `U^dagger U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let overlap = linalg::adjoint_matmul(&self.eigenvectors, &self.eigenvectors);
        linalg::max_abs_diff(&overlap, &linalg::identity(self.dim()))
    }

    /// Max-abs deviation of `U diag(lambda) U^dagger` from `h`.
    pub fn reconstruction_error(&self, h: &CMat) -> f64 {
        let d = self.dim();
        let lam = Array2::from_shape_fn((d, d), |(i, j)| {
            if i == j {
                Complex64::new(self.eigenvalues[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let rebuilt = linalg::matmul(
            &linalg::matmul(&self.eigenvectors, &lam),
            &linalg::adjoint(&self.eigenvectors),
        );
        linalg::max_abs_diff(&rebuilt, h)
    }

    /// Minimum gap between consecutive eigenvalues (0 for dim 1).
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
            .min(f64::INFINITY)
    }
}

/// Spectrum of `H_0 = H_S + H_B` without eigenvector materialization:
/// all sums `E_k^S + E_q^B`, sorted, shifted so the minimum is 0, with
/// `(system index, bath index)` labels per level.
#[derive(Debug, Clone)]
pub struct ComposedSpectrum {
    pub eigenvalues: Vec<f64>,
    pub labels: Vec<(usize, usize)>,
    pub d_s: usize,
    pub d_b: usize,
}

impl ComposedSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn norm_inf(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }
}

/// Minkowski sum of the system and bath spectra.
pub fn compose_h0_spectrum(hs: &SystemHamiltonian, bath_energies: &[f64]) -> ComposedSpectrum {
    let d_s = hs.dim();
    let d_b = bath_energies.len();
    let mut levels: Vec<(f64, (usize, usize))> = Vec::with_capacity(d_s * d_b);
    for (i, &es) in hs.energies().iter().enumerate() {
        for (j, &eb) in bath_energies.iter().enumerate() {
            levels.push((es + eb, (i, j)));
        }
    }
    levels.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let ground = levels[0].0;
    ComposedSpectrum {
        eigenvalues: levels.iter().map(|l| l.0 - ground).collect(),
        labels: levels.iter().map(|l| l.1).collect(),
        d_s,
        d_b,
    }
}

/// Eigensystem of the uncoupled Hamiltonian in the product basis.
///
/// Eigenvector `k` is the computational product basis vector for the
/// `k`-th smallest energy sum (a permutation matrix), so the result is
/// exact. The system factor is assumed diagonal; a system basis unitary,
/// if present, is rejected to keep the product-basis contract honest.
pub fn compose_h0(hs: &SystemHamiltonian, bath_energies: &[f64]) -> Result<Eigensystem> {
    compose_h0_with_cap(hs, bath_energies, DEFAULT_DENSE_DIM_CAP)
}

/// As [`compose_h0`] with an explicit dense-dimension cap.
pub fn compose_h0_with_cap(
    hs: &SystemHamiltonian,
    bath_energies: &[f64],
    cap: usize,
) -> Result<Eigensystem> {
    if hs.basis().is_some() {
        return Err(Error::InvalidParameter(
            "compose_h0 requires a computational-basis system Hamiltonian".into(),
        ));
    }
    let spectrum = compose_h0_spectrum(hs, bath_energies);
    let d = spectrum.dim();
    if d > cap {
        return Err(Error::ResourceCap(format!(
            "composed dimension {d} exceeds the dense cap {cap}"
        )));
    }
    let d_b = spectrum.d_b;
    let mut vecs: CMat = Array2::zeros((d, d));
    for (k, &(i, j)) in spectrum.labels.iter().enumerate() {
        vecs[[i * d_b + j, k]] = Complex64::new(1.0, 0.0);
    }
    Eigensystem::new(spectrum.eigenvalues, vecs)?.with_dims(spectrum.d_s, d_b)
}

// ---------------------------------------------------------------------
// Coupling
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingModel {
    /// Dense GUE-style Hermitian matrix; generically lifts all gap
    /// degeneracies.
    DenseRandom,
    /// Sum of single-site system x single-site bath product terms.
    LocalRandom,
}

#[derive(Debug, Clone, Copy)]
pub struct CouplingSpec {
    pub norm_target: f64,
    pub model: CouplingModel,
    pub seed: u64,
}

impl CouplingSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.norm_target >= 0.0) {
            return Err(Error::InvalidParameter(
                "coupling norm_target must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

fn random_hermitian_gue(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut v: CMat = Array2::zeros((d, d));
    for i in 0..d {
        let x: f64 = StandardNormal.sample(rng);
        v[[i, i]] = Complex64::new(x, 0.0);
        for j in (i + 1)..d {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let z = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            v[[i, j]] = z;
            v[[j, i]] = z.conj();
        }
    }
    v
}

fn random_hermitian_2x2(rng: &mut ChaCha8Rng) -> CMat {
    let mut g: CMat = Array2::zeros((2, 2));
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    g[[0, 0]] = Complex64::new(a, 0.0);
    g[[1, 1]] = Complex64::new(b, 0.0);
    g[[0, 1]] = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
    g[[1, 0]] = g[[0, 1]].conj();
    g
}

fn embed_single_site(op: &CMat, site: usize, n_sites: usize) -> CMat {
    let mut out = linalg::identity(1);
    for k in 0..n_sites {
        let factor = if k == site {
            op.clone()
        } else {
            linalg::identity(2)
        };
        out = linalg::kron(&out, &factor);
    }
    out
}

/// Sample a Hermitian coupling on a `d_s * d_b` space with
/// `||V||_inf = norm_target` (exact up to floating-point rescaling).
pub fn sample_coupling(d_s: usize, d_b: usize, spec: &CouplingSpec) -> Result<CMat> {
    spec.validate()?;
    let d = d_s * d_b;
    if d < 2 {
        return Err(Error::InvalidParameter(
            "coupling needs total dimension >= 2".into(),
        ));
    }
    if spec.norm_target == 0.0 {
        return Ok(Array2::zeros((d, d)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let raw = match spec.model {
        CouplingModel::DenseRandom => random_hermitian_gue(d, &mut rng),
        CouplingModel::LocalRandom => {
            if !d_s.is_power_of_two() || !d_b.is_power_of_two() {
                return Err(Error::InvalidParameter(
                    "local-random coupling needs qubit-factorable dimensions".into(),
                ));
            }
            let n = d_s.trailing_zeros() as usize;
            let m = d_b.trailing_zeros() as usize;
            if n == 0 || m == 0 {
                return Err(Error::InvalidParameter(
                    "local-random coupling needs at least one site on each side".into(),
                ));
            }
            let mut v: CMat = Array2::zeros((d, d));
            for a in 0..n {
                for b in 0..m {
                    let sys = embed_single_site(&random_hermitian_2x2(&mut rng), a, n);
                    let bath = embed_single_site(&random_hermitian_2x2(&mut rng), b, m);
                    v = v + linalg::kron(&sys, &bath);
                }
            }
            v
        }
    };
    let norm = linalg::hermitian_operator_norm(&raw)?;
    if norm == 0.0 {
        return Err(Error::InvalidParameter(
            "sampled coupling collapsed to zero; change the seed".into(),
        ));
    }
    let scale = Complex64::new(spec.norm_target / norm, 0.0);
    Ok(raw.mapv(|z| z * scale))
}

/// Dense Hermitian eigendecomposition with invariant checks.
pub fn eigendecompose(h: &CMat) -> Result<Eigensystem> {
    eigendecompose_with_cap(h, DEFAULT_DENSE_DIM_CAP)
}

/// As [`eigendecompose`] with an explicit dimension cap.
pub fn eigendecompose_with_cap(h: &CMat, cap: usize) -> Result<Eigensystem> {
    let d = h.nrows();
    if d > cap {
        return Err(Error::ResourceCap(format!(
            "dimension {d} exceeds the dense eigendecomposition cap {cap}"
        )));
    }
    let scale = h.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let tolerance = 1e-10 * scale.max(1.0);
    let deviation = linalg::hermiticity_error(h);
    if deviation > tolerance {
        return Err(Error::NotHermitian {
            deviation,
            tolerance,
        });
    }
    let (vals, vecs) = linalg::eigh(h)?;
    Eigensystem::new(vals, vecs)
}
