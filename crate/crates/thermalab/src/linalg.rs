//! Dense complex linear algebra helpers.
//!
//! Matrices are `ndarray::Array2<Complex64>` throughout the crate; the
//! heavy factorizations (Hermitian eigendecomposition, thin QR, SVD,
//! matrix products) are delegated to `faer`.

use faer::{Mat, Side};
use ndarray::{s, Array1, Array2};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMat = Array2<Complex64>;
pub type CVec = Array1<Complex64>;

fn to_faer(a: &CMat) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_faer(a: faer::MatRef<'_, Complex64>) -> CMat {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

/// `a * b` through the faer gemm kernel.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    from_faer((to_faer(a) * to_faer(b)).as_ref())
}

/// `a^dagger * b` without materializing the adjoint.
pub fn adjoint_matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.nrows(), b.nrows(), "adjoint_matmul shape mismatch");
    from_faer((to_faer(a).adjoint() * to_faer(b)).as_ref())
}

/// Conjugate transpose.
pub fn adjoint(a: &CMat) -> CMat {
    let mut out = Array2::zeros((a.ncols(), a.nrows()));
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out[[j, i]] = a[[i, j]].conj();
        }
    }
    out
}

/// Identity matrix.
pub fn identity(n: usize) -> CMat {
    Array2::from_diag_elem(n, Complex64::new(1.0, 0.0))
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Largest absolute deviation from Hermitian symmetry, `max |a - a^dagger|`.
pub fn hermiticity_error(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            let d = (a[[i, j]] - a[[j, i]].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Largest entrywise absolute difference.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Hermitian eigendecomposition. Returns eigenvalues in ascending order
/// and the matching unitary of eigenvector columns.
pub fn eigh(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigh expects a square matrix, got {}x{}",
            n,
            h.ncols()
        )));
    }
    let decomp = to_faer(h)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Backend(format!("self_adjoint_eigen: {e:?}")))?;
    let mut vals: Vec<f64> = (0..n).map(|i| decomp.S()[i].re).collect();
    let mut vecs = from_faer(decomp.U());
    // faer returns ascending eigenvalues; re-sort defensively so the
    // ordering contract never depends on backend internals.
    if vals.windows(2).any(|w| w[1] < w[0]) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
        let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
        let mut sorted_vecs = Array2::zeros((n, n));
        for (dst, &src) in order.iter().enumerate() {
            sorted_vecs
                .slice_mut(s![.., dst])
                .assign(&vecs.slice(s![.., src]));
        }
        vals = sorted_vals;
        vecs = sorted_vecs;
    }
    Ok((vals, vecs))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(h: &CMat) -> Result<Vec<f64>> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigvalsh expects a square matrix, got {}x{}",
            n,
            h.ncols()
        )));
    }
    let mut vals = to_faer(h)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Backend(format!("self_adjoint_eigenvalues: {e:?}")))?;
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals)
}

/// Orthonormal basis (thin Q factor) for the column space of `a`.
///
/// The returned matrix has `a.ncols()` orthonormal columns whose span
/// contains the column space of `a`; rank deficiency is harmless for the
/// restricted eigenproblems this feeds.
pub fn thin_qr_q(a: &CMat) -> CMat {
    let qr = to_faer(a).qr();
    from_faer(qr.compute_thin_Q().as_ref())
}

/// Singular values of a rectangular matrix, descending.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    to_faer(a)
        .singular_values()
        .map_err(|e| Error::Backend(format!("singular_values: {e:?}")))
}

/// Spectral (operator) norm of a Hermitian matrix: max |eigenvalue|.
pub fn hermitian_operator_norm(h: &CMat) -> Result<f64> {
    let vals = eigvalsh(h)?;
    Ok(vals
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs())))
}

/// Compensated (Kahan) accumulator for long fixed-order sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut acc = KahanSum::new();
    for x in items {
        acc.add(x);
    }
    acc.value()
}
