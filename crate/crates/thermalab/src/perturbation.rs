//! Spectral-projector census and the interacting-vs-noninteracting
//! distance bound.
//!
//! For a window `[E, E+Delta)` let `G` project on the eigenstates of the
//! coupled Hamiltonian `H = H_0 + V` inside the window and `F` on those
//! of `H_0`. The census records the support sizes, the edge-strip counts
//! at a working margin `epsilon`, and the exact projector norms
//! `||G Fbar||_1`, `||Gbar F||_1`, `||G_i Fbar||_inf`. All norms are
//! computed from the principal angles between the two window subspaces
//! (singular values of the overlap block), which is an exact restriction
//! of the full-space computation to the joint support.

use crate::hamiltonians::Eigensystem;
use crate::linalg::{self, CMat};
use crate::states::EnergyWindow;
use crate::{Error, Result};

/// Support sizes, edge counts, and projector norms for one window and
/// one margin `epsilon`.
#[derive(Debug, Clone, Copy)]
pub struct ProjectorCensus {
    /// rank(G): coupled eigenstates in the window.
    pub omega_g: usize,
    /// rank(F): uncoupled eigenstates in the window.
    pub omega_f: usize,
    pub omega_max: usize,
    pub omega_min: usize,
    pub delta_omega: usize,
    /// Eigenstates of both Hamiltonians in the edge strips
    /// `[E, E+eps) U [E+Delta-eps, E+Delta)`.
    pub omega_eps: usize,
    pub epsilon: f64,
    pub norm_g_fbar_one: f64,
    pub norm_gbar_f_one: f64,
    pub norm_gi_fbar_inf: f64,
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Nuclear norm of `P (1 - Q)` for projectors whose overlap block has
/// the given singular values.
fn projector_complement_trace_norm(rank_p: usize, rank_q: usize, overlap_singulars: &[f64]) -> f64 {
    let shared = overlap_singulars.len().min(rank_p).min(rank_q);
    let mut total = 0.0;
    for &s in overlap_singulars.iter().take(shared) {
        let s = clamp01(s);
        total += (1.0 - s * s).max(0.0).sqrt();
    }
    // Directions of P with no counterpart in Q contribute a singular
    // value of exactly 1 each.
    total + rank_p.saturating_sub(rank_q) as f64
}

/// Census of the window projectors of `h` (coupled) against `h0`
/// (uncoupled) at margin `epsilon`, `0 < epsilon < Delta/2`.
pub fn projector_census(
    h0: &Eigensystem,
    h: &Eigensystem,
    w: &EnergyWindow,
    epsilon: f64,
) -> Result<ProjectorCensus> {
    WindowOverlap::new(h0, h, w)?.census_at(epsilon)
}

/// Epsilon-independent data of one window: eigenvalue ranges, the
/// overlap block `W = U_G^dagger U_F`, its singular values, and the Gram
/// matrix `W W^dagger`. Sweeping an epsilon grid through
/// [`WindowOverlap::census_at`] reuses all of it; only a principal
/// submatrix eigensolve remains per margin.
pub struct WindowOverlap<'a> {
    h0: &'a Eigensystem,
    h: &'a Eigensystem,
    window: EnergyWindow,
    range_g: std::ops::Range<usize>,
    range_f: std::ops::Range<usize>,
    overlap_singulars: Vec<f64>,
    gram: Option<CMat>,
}

impl<'a> WindowOverlap<'a> {
    pub fn new(h0: &'a Eigensystem, h: &'a Eigensystem, w: &EnergyWindow) -> Result<Self> {
        if h0.dim() != h.dim() {
            return Err(Error::DimensionMismatch(format!(
                "eigensystem dimensions differ: {} vs {}",
                h0.dim(),
                h.dim()
            )));
        }
        let range_g = h.window_range(w.lower, w.width);
        let range_f = h0.window_range(w.lower, w.width);
        let (overlap_singulars, gram) = if range_g.is_empty() || range_f.is_empty() {
            (Vec::new(), None)
        } else {
            let block_g = h.column_block(range_g.clone());
            let block_f = h0.column_block(range_f.clone());
            let overlap = linalg::adjoint_matmul(&block_g, &block_f);
            let singulars = linalg::singular_values(&overlap)?;
            let gram = linalg::matmul(&overlap, &linalg::adjoint(&overlap));
            (singulars, Some(gram))
        };
        Ok(Self {
            h0,
            h,
            window: *w,
            range_g,
            range_f,
            overlap_singulars,
            gram,
        })
    }

    pub fn omega_g(&self) -> usize {
        self.range_g.len()
    }

    pub fn omega_f(&self) -> usize {
        self.range_f.len()
    }

    pub fn census_at(&self, epsilon: f64) -> Result<ProjectorCensus> {
        let w = &self.window;
        if !(epsilon > 0.0 && epsilon < w.width / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must satisfy 0 < epsilon < width/2 = {}, got {epsilon}",
                w.width / 2.0
            )));
        }
        let omega_g = self.omega_g();
        let omega_f = self.omega_f();
        let omega_max = omega_g.max(omega_f);
        let omega_min = omega_g.min(omega_f);

        // Interior strip [E+eps, E+Delta-eps); edge counts follow from
        // the window counts so that G = G_i + G_e holds exactly.
        let interior_lo = w.lower + epsilon;
        let interior_hi = w.upper() - epsilon;
        let interior_width = interior_hi - interior_lo;
        let interior_g = self.h.window_range(interior_lo, interior_width);
        let interior_f = self.h0.window_range(interior_lo, interior_width);
        let gi_range = intersect(&self.range_g, &interior_g);
        let edge_g = omega_g - gi_range.len();
        let edge_f = omega_f - intersect(&self.range_f, &interior_f).len();
        let omega_eps = edge_g + edge_f;

        let (norm_g_fbar_one, norm_gbar_f_one, norm_gi_fbar_inf) = if omega_g == 0 && omega_f == 0
        {
            (0.0, 0.0, 0.0)
        } else if omega_f == 0 {
            // F empty: G Fbar = G.
            (omega_g as f64, 0.0, if gi_range.is_empty() { 0.0 } else { 1.0 })
        } else if omega_g == 0 {
            (0.0, omega_f as f64, 0.0)
        } else {
            let g_fbar =
                projector_complement_trace_norm(omega_g, omega_f, &self.overlap_singulars);
            let gbar_f =
                projector_complement_trace_norm(omega_f, omega_g, &self.overlap_singulars);
            let gi_len = gi_range.len();
            let gi_fbar_inf = if gi_len == 0 {
                0.0
            } else if gi_len > omega_f {
                1.0
            } else {
                // lambda_min of the principal submatrix of W W^dagger on
                // the interior rows.
                let lo = gi_range.start - self.range_g.start;
                let hi = gi_range.end - self.range_g.start;
                let gram = self.gram.as_ref().expect("gram exists when both nonempty");
                let sub = gram.slice(ndarray::s![lo..hi, lo..hi]).to_owned();
                let eigs = linalg::eigvalsh(&sub)?;
                let lambda_min = eigs.first().copied().unwrap_or(0.0);
                (1.0 - clamp01(lambda_min.max(0.0).sqrt()).powi(2))
                    .max(0.0)
                    .sqrt()
            };
            (g_fbar, gbar_f, gi_fbar_inf)
        };

        Ok(ProjectorCensus {
            omega_g,
            omega_f,
            omega_max,
            omega_min,
            delta_omega: omega_max - omega_min,
            omega_eps,
            epsilon,
            norm_g_fbar_one,
            norm_gbar_f_one,
            norm_gi_fbar_inf,
        })
    }
}

fn intersect(a: &std::ops::Range<usize>, b: &std::ops::Range<usize>) -> std::ops::Range<usize> {
    let start = a.start.max(b.start);
    start..a.end.min(b.end).max(start)
}

/// The window-perturbation bound
/// `||V|| / eps + (DeltaOmega + Omega_eps) / (2 Omega_max)`.
pub fn window_perturbation_bound(census: &ProjectorCensus, v_norm: f64) -> Result<f64> {
    if census.omega_max == 0 {
        return Err(Error::InvalidParameter(
            "window_perturbation_bound needs a nonempty window (Omega_max > 0)".into(),
        ));
    }
    Ok(v_norm / census.epsilon
        + (census.delta_omega + census.omega_eps) as f64 / (2.0 * census.omega_max as f64))
}

/// Closed-form margin choice for a flat density of states.
#[derive(Debug, Clone, Copy)]
pub struct FlatEpsilon {
    pub epsilon: f64,
    /// Main-form heuristic `4 sqrt(||V|| / Delta)`.
    pub bound: f64,
    /// Alternate constant `(3 sqrt(2) / 2) sqrt(||V|| / Delta)` given in
    /// the appendix treatment of the same quantity; both are reported.
    pub bound_alternate: f64,
    /// False when `epsilon >= Delta/2` (heuristic regime invalid) or the
    /// coupling vanishes.
    pub valid: bool,
}

/// `epsilon = sqrt(||V|| Delta / 2)` and the flat-DOS heuristic bound.
pub fn optimal_epsilon_flat(v_norm: f64, delta: f64) -> Result<FlatEpsilon> {
    if !(v_norm >= 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidParameter(
            "optimal_epsilon_flat needs v_norm >= 0 and delta > 0".into(),
        ));
    }
    let epsilon = (v_norm * delta / 2.0).sqrt();
    let ratio = (v_norm / delta).sqrt();
    Ok(FlatEpsilon {
        epsilon,
        bound: 4.0 * ratio,
        bound_alternate: 1.5 * std::f64::consts::SQRT_2 * ratio,
        valid: v_norm > 0.0 && epsilon < delta / 2.0,
    })
}

/// Margin choice and bound for an exponential density of states.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialDosBound {
    pub epsilon: f64,
    /// `2 sqrt(beta ||V||) / (1 - exp(-beta Delta))`.
    pub bound: f64,
}

/// `epsilon = sqrt(||V|| / beta)` and the temperature-form bound.
pub fn exponential_dos_bound(v_norm: f64, beta: f64, delta: f64) -> Result<ExponentialDosBound> {
    if !(beta > 0.0) || !(v_norm > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidParameter(
            "exponential_dos_bound needs v_norm > 0, beta > 0, delta > 0".into(),
        ));
    }
    let epsilon = (v_norm / beta).sqrt();
    let bound = 2.0 * (beta * v_norm).sqrt() / (1.0 - (-beta * delta).exp());
    Ok(ExponentialDosBound { epsilon, bound })
}

/// Logarithmic epsilon grid inside `(gap_floor, Delta/2)`, clamped away
/// from both endpoints.
pub fn epsilon_log_grid(gap_floor: f64, delta: f64, points: usize) -> Vec<f64> {
    let hi = delta / 2.0 * (1.0 - 1e-9);
    let lo = gap_floor.max(delta * 1e-9).min(hi * 0.5);
    if points <= 1 {
        return vec![(lo * hi).sqrt()];
    }
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (ln_lo + (ln_hi - ln_lo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

// ---------------------------------------------------------------------
// Exact distances between the two microcanonical states
// ---------------------------------------------------------------------

/// Exact trace distances between the microcanonical states of `h` and
/// `h0` on a window, full and (when metadata is present) reduced.
#[derive(Debug, Clone, Copy)]
pub struct PairDistances {
    pub full: f64,
    pub reduced: Option<f64>,
}

/// Trace distances between the two window microcanonical states via the
/// eigendecomposition of their difference restricted to the exact joint
/// support (the orthogonal complement contributes eigenvalue 0).
pub fn microcanonical_pair_distances(
    h0: &Eigensystem,
    h: &Eigensystem,
    w: &EnergyWindow,
) -> Result<PairDistances> {
    let range_g = h.window_range(w.lower, w.width);
    let range_f = h0.window_range(w.lower, w.width);
    if range_g.is_empty() || range_f.is_empty() {
        return Err(Error::EmptyWindow {
            lower: w.lower,
            lower_plus_width: w.upper(),
        });
    }
    let block_g = h.column_block(range_g);
    let block_f = h0.column_block(range_f);
    let full = projector_mixture_distance(&block_g, &block_f)?;

    let reduced = match (h.dims(), h0.dims()) {
        (Some(dims_h), Some(dims_h0)) if dims_h == dims_h0 => {
            let a = reduce_projector_mixture(&block_g, dims_h);
            let b = reduce_projector_mixture(&block_f, dims_h0);
            let diff = &a - &b;
            let vals = linalg::eigvalsh(&diff)?;
            Some(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
        }
        _ => None,
    };
    Ok(PairDistances { full, reduced })
}

/// `(1/2) || P/rank(P) - Q/rank(Q) ||_1` for projectors given by
/// orthonormal column blocks.
pub fn projector_mixture_distance(block_g: &CMat, block_f: &CMat) -> Result<f64> {
    let (a, b) = restrict_to_joint_support(block_g, block_f);
    let wg = 1.0 / block_g.ncols() as f64;
    let wf = 1.0 / block_f.ncols() as f64;
    let m = &scaled_gram(&a, wg) - &scaled_gram(&b, wf);
    let vals = linalg::eigvalsh(&m)?;
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

/// Nuclear norm `||G - F||_1` of the window projector difference.
pub fn projector_difference_trace_norm(
    h0: &Eigensystem,
    h: &Eigensystem,
    w: &EnergyWindow,
) -> Result<f64> {
    let range_g = h.window_range(w.lower, w.width);
    let range_f = h0.window_range(w.lower, w.width);
    if range_g.is_empty() && range_f.is_empty() {
        return Ok(0.0);
    }
    if range_g.is_empty() {
        return Ok(range_f.len() as f64);
    }
    if range_f.is_empty() {
        return Ok(range_g.len() as f64);
    }
    let block_g = h.column_block(range_g);
    let block_f = h0.column_block(range_f);
    let (a, b) = restrict_to_joint_support(&block_g, &block_f);
    let m = &scaled_gram(&a, 1.0) - &scaled_gram(&b, 1.0);
    let vals = linalg::eigvalsh(&m)?;
    Ok(vals.iter().map(|v| v.abs()).sum::<f64>())
}

/// Orthonormal basis of the joint column span; returns the two blocks
/// expressed in that basis.
fn restrict_to_joint_support(block_g: &CMat, block_f: &CMat) -> (CMat, CMat) {
    let d = block_g.nrows();
    let total = block_g.ncols() + block_f.ncols();
    let mut concat: CMat = ndarray::Array2::zeros((d, total));
    concat
        .slice_mut(ndarray::s![.., ..block_g.ncols()])
        .assign(block_g);
    concat
        .slice_mut(ndarray::s![.., block_g.ncols()..])
        .assign(block_f);
    let q = linalg::thin_qr_q(&concat);
    let a = linalg::adjoint_matmul(&q, block_g);
    let b = linalg::adjoint_matmul(&q, block_f);
    (a, b)
}

fn scaled_gram(a: &CMat, weight: f64) -> CMat {
    let mut m = linalg::matmul(a, &linalg::adjoint(a));
    let scale = num_complex::Complex64::new(weight, 0.0);
    m.mapv_inplace(|z| z * scale);
    m
}

/// Reduced state of the equal-weight mixture of the block's columns:
/// `rho^S = (1/Omega) sum_k Tr_B |col_k><col_k|`.
pub fn reduce_projector_mixture(block: &CMat, dims: (usize, usize)) -> CMat {
    let (d_s, d_b) = dims;
    let count = block.ncols();
    let mut out: CMat = ndarray::Array2::zeros((d_s, d_s));
    for k in 0..count {
        for a in 0..d_s {
            for b in 0..d_s {
                let mut acc = num_complex::Complex64::new(0.0, 0.0);
                for q in 0..d_b {
                    acc += block[[a * d_b + q, k]] * block[[b * d_b + q, k]].conj();
                }
                out[[a, b]] += acc;
            }
        }
    }
    let scale = num_complex::Complex64::new(1.0 / count as f64, 0.0);
    out.mapv_inplace(|z| z * scale);
    out
}
