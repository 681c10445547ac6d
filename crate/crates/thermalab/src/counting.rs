//! Level counting for the decoupled rectangular state and the smoothed
//! density-of-states model of the disordered spin bath.
//!
//! The reduced state of the decoupled window mixture has eigenvalues
//! `p_k = Omega^B_Delta(E - E_k^S) / sum_l Omega^B_Delta(E - E_l^S)`,
//! so the whole comparison against the Gibbs state runs on spectra alone.
//! The smoothed model replaces the exact counts by the integral of a
//! Gaussian density whose log-count curvature controls the exponential
//! fit quality (the `gamma` range below).

use crate::hamiltonians::SystemHamiltonian;
use crate::quadrature;
use crate::states::{gibbs_weights, trace_distance_diagonal, EnergyWindow};
use crate::{Error, Result};

const QUAD_REL_TOL: f64 = 1e-10;

/// Smoothed density of states of the `m`-spin bath with mean local
/// excitation energy `eta`.
#[derive(Debug, Clone, Copy)]
pub struct DosModel {
    pub eta: f64,
    pub m: usize,
}

impl DosModel {
    pub fn new(eta: f64, m: usize) -> Result<Self> {
        if !(eta > 0.0) || m < 1 {
            return Err(Error::InvalidParameter(
                "DosModel needs eta > 0 and m >= 1".into(),
            ));
        }
        Ok(Self { eta, m })
    }

    /// Center of the Gaussian profile, `eta m / 2`.
    pub fn center(&self) -> f64 {
        0.5 * self.eta * self.m as f64
    }

    /// Standard deviation of the Gaussian profile, `eta sqrt(m) / 2`.
    pub fn sigma(&self) -> f64 {
        0.5 * self.eta * (self.m as f64).sqrt()
    }

    /// Smoothed density
    /// `rho^B(E) = (1/eta) 2^m sqrt(2/(pi m)) exp(-2m (E/(eta m) - 1/2)^2)`.
    pub fn density(&self, e: f64) -> f64 {
        let m = self.m as f64;
        let u = e / (self.eta * m) - 0.5;
        (2.0_f64).powi(self.m as i32) / self.eta * (2.0 / (std::f64::consts::PI * m)).sqrt()
            * (-2.0 * m * u * u).exp()
    }

    /// Analytic derivative of the density.
    pub fn density_derivative(&self, e: f64) -> f64 {
        self.density(e) * self.beta_local(e)
    }

    /// Local inverse temperature of the density profile,
    /// `d ln rho / dE = (4/eta)(1/2 - E/(eta m))`.
    pub fn beta_local(&self, e: f64) -> f64 {
        4.0 / self.eta * (0.5 - e / (self.eta * self.m as f64))
    }

    /// Smoothed window count `Xi_Delta(E) = int_E^{E+Delta} rho`, by
    /// adaptive quadrature to 1e-10 relative.
    pub fn smoothed_count(&self, e: f64, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(
                "smoothed_count needs delta > 0".into(),
            ));
        }
        Ok(quadrature::integrate(|x| self.density(x), e, e + delta, QUAD_REL_TOL)?.value)
    }

    /// Integral of the density over (effectively) the whole line.
    pub fn total_count(&self) -> Result<f64> {
        let lo = self.center() - 30.0 * self.sigma();
        let hi = self.center() + 30.0 * self.sigma();
        Ok(quadrature::integrate(|x| self.density(x), lo, hi, QUAD_REL_TOL)?.value)
    }

    /// Log smoothed count `s(E) = ln Xi_Delta(E)`.
    pub fn log_count(&self, e: f64, delta: f64) -> Result<f64> {
        Ok(self.smoothed_count(e, delta)?.ln())
    }

    /// Inverse temperature `beta = ds/dE`, with the analytic numerator
    /// `rho(E+Delta) - rho(E)`.
    pub fn beta(&self, e: f64, delta: f64) -> Result<f64> {
        let xi = self.smoothed_count(e, delta)?;
        Ok((self.density(e + delta) - self.density(e)) / xi)
    }

    /// Curvature `d^2 s / dE^2`, analytic up to the quadrature in `Xi`.
    pub fn curvature(&self, e: f64, delta: f64) -> Result<f64> {
        let xi = self.smoothed_count(e, delta)?;
        let beta = (self.density(e + delta) - self.density(e)) / xi;
        let second = (self.density_derivative(e + delta) - self.density_derivative(e)) / xi;
        Ok(second - beta * beta)
    }
}

/// Where the Gibbs inverse temperature is read off the smoothed model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaReference {
    /// Lower window edge `E` (the expansion point of the exponential fit).
    LowerEdge,
    /// Window midpoint `E + Delta/2`, for sensitivity studies.
    Midpoint,
}

/// Exact number of bath levels in the half-open window `[e, e+delta)`.
/// `energies` must be sorted ascending.
pub fn bath_count(energies: &[f64], e: f64, delta: f64) -> usize {
    debug_assert!(delta > 0.0);
    let lo = energies.partition_point(|&x| x < e);
    let hi = energies.partition_point(|&x| x < e + delta);
    hi - lo
}

/// Spectrum of the reduced decoupled window mixture:
/// `p_k` proportional to the bath count in `[E - E_k^S, E - E_k^S + Delta)`.
pub fn decoupled_reduced_probabilities(
    hs: &SystemHamiltonian,
    bath_energies: &[f64],
    w: &EnergyWindow,
) -> Result<Vec<f64>> {
    let counts: Vec<usize> = hs
        .energies()
        .iter()
        .map(|&ek| bath_count(bath_energies, w.lower - ek, w.width))
        .collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyWindow {
            lower: w.lower,
            lower_plus_width: w.upper(),
        });
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// Closed-form counting bound for the spin bath,
/// `(1/2)(exp(2 ||H_S||^2 / (eta^2 m)) - 1)`; the exponentially small
/// additive constant is exposed separately as a slack parameter.
pub fn counting_bound_spin_bath(hs_norm: f64, eta: f64, m: usize) -> f64 {
    0.5 * ((2.0 * hs_norm * hs_norm / (eta * eta * m as f64)).exp() - 1.0)
}

/// Min/max of the sampled log-count curvature.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureRange {
    pub min: f64,
    pub max: f64,
}

/// Sample `d^2 s/dE^2` on a uniform grid over `[e_lo, e_hi]`.
pub fn curvature_range(
    model: &DosModel,
    delta: f64,
    e_lo: f64,
    e_hi: f64,
    grid_points: usize,
) -> Result<CurvatureRange> {
    if grid_points < 2 || !(e_hi > e_lo) {
        return Err(Error::InvalidParameter(
            "curvature_range needs e_hi > e_lo and at least 2 grid points".into(),
        ));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..grid_points {
        let e = e_lo + (e_hi - e_lo) * i as f64 / (grid_points - 1) as f64;
        let c = model.curvature(e, delta)?;
        min = min.min(c);
        max = max.max(c);
    }
    Ok(CurvatureRange { min, max })
}

/// Range of the Taylor-remainder exponents
/// `gamma_k(xi) = (1/2) s''(xi) (E_k^S)^2` over all system levels and a
/// grid of expansion points `xi in [E - E_k^S, E]`.
pub fn gamma_range(
    model: &DosModel,
    hs_energies: &[f64],
    e: f64,
    delta: f64,
    xi_grid_points: usize,
) -> Result<(f64, f64)> {
    let mut gamma_min = f64::INFINITY;
    let mut gamma_max = f64::NEG_INFINITY;
    for &ek in hs_energies {
        if ek == 0.0 {
            gamma_min = gamma_min.min(0.0);
            gamma_max = gamma_max.max(0.0);
            continue;
        }
        let points = xi_grid_points.max(2);
        for i in 0..points {
            let xi = e - ek + ek * i as f64 / (points - 1) as f64;
            let gamma = 0.5 * model.curvature(xi, delta)? * ek * ek;
            gamma_min = gamma_min.min(gamma);
            gamma_max = gamma_max.max(gamma);
        }
    }
    Ok((gamma_min, gamma_max))
}

/// Exact Taylor exponents from the realized counts:
/// `gamma_k = ln Omega(E - E_k^S) - ln Omega(E) + beta E_k^S`.
pub fn gamma_exact(
    bath_energies: &[f64],
    hs_energies: &[f64],
    e: f64,
    delta: f64,
    beta: f64,
) -> Result<Vec<f64>> {
    let base = bath_count(bath_energies, e, delta);
    if base == 0 {
        return Err(Error::EmptyWindow {
            lower: e,
            lower_plus_width: e + delta,
        });
    }
    hs_energies
        .iter()
        .map(|&ek| {
            let count = bath_count(bath_energies, e - ek, delta);
            if count == 0 {
                return Err(Error::EmptyWindow {
                    lower: e - ek,
                    lower_plus_width: e - ek + delta,
                });
            }
            Ok((count as f64 / base as f64).ln() + beta * ek)
        })
        .collect()
}

/// One window placement of the counting comparison: the exact spectrum
/// distance to the Gibbs state against the curvature and closed-form
/// bounds.
#[derive(Debug, Clone, Copy)]
pub struct CountingComparison {
    pub beta: f64,
    /// Exact `(1/2) sum_k |p_k - q_k|`.
    pub distance: f64,
    /// `(1/2)(exp(gamma_max - gamma_min) - 1)` from grid maximization.
    pub gamma_bound: f64,
    /// Closed-form spin-bath bound `(1/2)(exp(2/lambda) - 1)`.
    pub closed_form_bound: f64,
    /// Calibrated smoothing slack: the l1 gap
    /// `sum_k |Omega_k / sum Omega - Xi_k / sum Xi|` between the
    /// exact-count spectrum and the smooth-profile spectrum, where the
    /// profile is the Gaussian matched to the realized level list (its
    /// exact mean and variance). This isolates the discreteness error
    /// that the exponentially small constant of the counting argument
    /// stands for; deviations of the realization from the idealized
    /// `(eta, m)` model are a separate, reported effect (`beta` and the
    /// bounds always use the idealized model). For a single deviating
    /// level the slack reduces to `2 |Xi - Omega| / sum Omega`.
    pub smoothing_slack: f64,
    /// True when the `||H_S|| <= E` working assumption is violated
    /// (reported as a warning, not an error).
    pub hs_norm_exceeds_e: bool,
}

/// Compare the reduced decoupled window mixture against the Gibbs state
/// at the model temperature of the window.
pub fn counting_comparison(
    hs: &SystemHamiltonian,
    bath_energies: &[f64],
    model: &DosModel,
    w: &EnergyWindow,
    beta_ref: BetaReference,
) -> Result<CountingComparison> {
    let p = decoupled_reduced_probabilities(hs, bath_energies, w)?;
    let beta_point = match beta_ref {
        BetaReference::LowerEdge => w.lower,
        BetaReference::Midpoint => w.lower + 0.5 * w.width,
    };
    let beta = model.beta(beta_point, w.width)?;
    let q = gibbs_weights(hs.energies(), beta.max(0.0));
    let distance = trace_distance_diagonal(&p, &q);

    let (gamma_min, gamma_max) = gamma_range(model, hs.energies(), w.lower, w.width, 17)?;
    let gamma_bound = 0.5 * ((gamma_max - gamma_min).exp() - 1.0);
    let closed_form_bound = counting_bound_spin_bath(hs.norm_inf(), model.eta, model.m);

    // Discreteness slack against the realization-matched profile. The
    // bath levels are sums of independent symmetric site terms, so the
    // list concentrates around a Gaussian with the list's exact mean and
    // variance; the leading finite-size correction is the fourth
    // cumulant (the third vanishes identically), included as the
    // Edgeworth He4 term. Without it the residual kurtosis deficit
    // (~ -2/m relative) dominates the slack at m ~ 12.
    let d_b = bath_energies.len() as f64;
    let mean: f64 = bath_energies.iter().sum::<f64>() / d_b;
    let var: f64 = bath_energies
        .iter()
        .map(|&e| (e - mean) * (e - mean))
        .sum::<f64>()
        / d_b;
    let fourth: f64 = bath_energies
        .iter()
        .map(|&e| (e - mean).powi(4))
        .sum::<f64>()
        / d_b;
    let kurtosis_coeff = (fourth - 3.0 * var * var) / (24.0 * var * var);
    let realized_count = |e_lo: f64| -> Result<f64> {
        let density = |x: f64| {
            let z2 = (x - mean) * (x - mean) / var;
            let he4 = z2 * z2 - 6.0 * z2 + 3.0;
            d_b / (2.0 * std::f64::consts::PI * var).sqrt() * (-z2 / 2.0).exp()
                * (1.0 + kurtosis_coeff * he4)
        };
        Ok(quadrature::integrate(density, e_lo, e_lo + w.width, QUAD_REL_TOL)?.value)
    };
    let smoothed: Vec<f64> = hs
        .energies()
        .iter()
        .map(|&ek| realized_count(w.lower - ek))
        .collect::<Result<_>>()?;
    let smoothed_total: f64 = smoothed.iter().sum();
    let smoothing_slack = if smoothed_total > 0.0 {
        p.iter()
            .zip(smoothed.iter())
            .map(|(&pk, &xi)| (pk - xi / smoothed_total).abs())
            .sum()
    } else {
        f64::INFINITY
    };

    Ok(CountingComparison {
        beta,
        distance,
        gamma_bound,
        closed_form_bound,
        smoothing_slack,
        hs_norm_exceeds_e: hs.norm_inf() > w.lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_bath, BathSpec};

    fn undisordered(m: usize) -> Vec<f64> {
        build_bath(&BathSpec {
            m,
            eta: 1.0,
            disorder_rel: 0.0,
            seed: 0,
        })
        .unwrap()
        .energies
    }

    #[test]
    fn bath_count_examples() {
        let energies = undisordered(3);
        // Window entirely below the spectrum.
        assert_eq!(bath_count(&energies, -10.0, 2.0), 0);
        // Window covering the full range.
        assert_eq!(bath_count(&energies, -0.5, 10.0), 8);
        // Three singly excited levels in [0.5, 1.5).
        assert_eq!(bath_count(&energies, 0.5, 1.0), 3);
    }

    #[test]
    fn smoothed_count_normalizes() {
        let model = DosModel::new(1.0, 10).unwrap();
        let total = model.total_count().unwrap();
        assert!((total - 1024.0).abs() < 1e-9 * 1024.0);
    }

    #[test]
    fn smoothed_count_is_symmetric_about_center() {
        let model = DosModel::new(0.8, 9).unwrap();
        let c = model.center();
        let a = model.smoothed_count(c - 2.0 - 0.5, 0.5).unwrap();
        let b = model.smoothed_count(c + 2.0, 0.5).unwrap();
        assert!((a - b).abs() < 1e-10 * a.abs());
    }

    #[test]
    fn smoothed_count_tracks_exact_counts_in_bulk() {
        // Smoothability is an empirical property of the disorder width.
        // At disorder_rel = 0.05 the spectrum is still a comb of narrow
        // clusters at integer multiples of eta, so sub-eta windows can
        // swallow a whole cluster or miss it (worst measured relative
        // gap ~0.16 at Delta = eta m / 16). Disorder near 0.3 merges the
        // clusters and pushes the gap below 2% without distorting the
        // Gaussian profile noticeably.
        let m = 12;
        let model = DosModel::new(1.0, m).unwrap();
        let delta = model.eta * m as f64 / 16.0;
        let d_b = (1u64 << m) as f64;
        let c = model.center();
        let worst_gap = |disorder_rel: f64| -> f64 {
            let bath = build_bath(&BathSpec {
                m,
                eta: 1.0,
                disorder_rel,
                seed: 5,
            })
            .unwrap();
            let mut worst = 0.0_f64;
            for i in 0..9 {
                let e = c - model.sigma() + 2.0 * model.sigma() * i as f64 / 8.0 - delta / 2.0;
                let exact = bath_count(&bath.energies, e, delta) as f64;
                let smooth = model.smoothed_count(e, delta).unwrap();
                worst = worst.max((exact - smooth).abs() / d_b);
            }
            worst
        };
        assert!(worst_gap(0.05) <= 0.20);
        assert!(worst_gap(0.30) <= 0.02);
    }

    #[test]
    fn reduced_probabilities_flat_dos() {
        // Artificial flat bath: equally spaced levels.
        let bath: Vec<f64> = (0..4000).map(|i| i as f64 * 1e-3).collect();
        let hs = crate::hamiltonians::SystemHamiltonian::new(1, vec![0.0, 0.5]).unwrap();
        let w = EnergyWindow::new(1.0, 0.8).unwrap();
        let p = decoupled_reduced_probabilities(&hs, &bath, &w).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reduced_probabilities_trivial_system() {
        let bath = undisordered(4);
        let hs = crate::hamiltonians::SystemHamiltonian::new(0, vec![0.0]).unwrap();
        let w = EnergyWindow::new(1.5, 1.0).unwrap();
        let p = decoupled_reduced_probabilities(&hs, &bath, &w).unwrap();
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn reduced_probabilities_match_operator_oracle() {
        use crate::hamiltonians::{compose_h0, SystemHamiltonian};
        use crate::states::{microcanonical_state, partial_trace_bath};
        let hs = SystemHamiltonian::new(1, vec![0.0, 0.4]).unwrap();
        let bath = build_bath(&BathSpec {
            m: 10,
            eta: 1.0,
            disorder_rel: 0.05,
            seed: 31,
        })
        .unwrap();
        let w = EnergyWindow::new(4.0, 0.9).unwrap();
        let p = decoupled_reduced_probabilities(&hs, &bath.energies, &w).unwrap();

        let eigs = compose_h0(&hs, &bath.energies).unwrap();
        let reduced = partial_trace_bath(&microcanonical_state(&eigs, &w).unwrap()).unwrap();
        // The reduced state is diagonal in the (sorted) system basis.
        for k in 0..2 {
            assert!(
                (reduced.matrix()[[k, k]].re - p[k]).abs() < 1e-12,
                "p_{k}: {} vs {}",
                reduced.matrix()[[k, k]].re,
                p[k]
            );
        }
        assert!(reduced.matrix()[[0, 1]].norm() < 1e-12);
    }

    #[test]
    fn counting_bound_values() {
        assert_eq!(counting_bound_spin_bath(0.0, 1.0, 5), 0.0);
        // lambda = eta^2 m / ||H_S||^2 = 2.
        let b = counting_bound_spin_bath(1.0, 1.0, 2);
        assert!((b - 0.5 * (std::f64::consts::E - 1.0)).abs() < 1e-12);
        // lambda = 20.
        let b = counting_bound_spin_bath(1.0, 1.0, 20);
        assert!((b - 0.5 * ((0.1_f64).exp() - 1.0)).abs() < 1e-12);
        assert!((b - 0.052_585_459_037_824_45).abs() < 1e-12);
    }

    #[test]
    fn curvature_narrow_window_limit() {
        let model = DosModel::new(1.0, 8).unwrap();
        let target = -4.0 / (model.eta * model.eta * model.m as f64);
        let c = model.curvature(model.center() - 1.0, 1e-4).unwrap();
        assert!(
            ((c - target) / target).abs() < 1e-6,
            "curvature {c} vs {target}"
        );
    }

    #[test]
    fn curvature_shrinks_for_wide_windows() {
        let model = DosModel::new(1.0, 8).unwrap();
        let target = -4.0 / (model.eta * model.eta * model.m as f64);
        let narrow = model.curvature(2.0, 1e-3).unwrap();
        let wide = model.curvature(2.0, 3.0).unwrap();
        assert!(wide.abs() < narrow.abs());
        let range = curvature_range(&model, 1.0, 1.0, model.center(), 33).unwrap();
        assert!(range.max < 0.0);
        assert!(range.min > target - 1e-9 * target.abs());
    }

    #[test]
    fn gamma_range_respects_closed_form() {
        let model = DosModel::new(1.0, 10).unwrap();
        let hs = crate::hamiltonians::SystemHamiltonian::new(1, vec![0.0, 0.7]).unwrap();
        let (gmin, gmax) = gamma_range(&model, hs.energies(), 4.0, 1.0, 17).unwrap();
        let cap = 2.0 * hs.norm_inf() * hs.norm_inf() / (model.eta * model.eta * model.m as f64);
        assert!(gmax <= 0.0 + 1e-12);
        assert!(gmax - gmin <= cap + 1e-9);
    }

    #[test]
    fn partition_ratio_identity() {
        // Z_Q / Z_P = sum_k p_k exp(-gamma_k) with exact-count gammas.
        let bath = build_bath(&BathSpec {
            m: 12,
            eta: 1.0,
            disorder_rel: 0.05,
            seed: 17,
        })
        .unwrap();
        let hs = crate::hamiltonians::SystemHamiltonian::new(2, vec![0.0, 0.2, 0.5, 0.8]).unwrap();
        let w = EnergyWindow::new(4.2, 1.1).unwrap();
        let model = DosModel::new(1.0, 12).unwrap();
        let beta = model.beta(w.lower, w.width).unwrap();
        let p = decoupled_reduced_probabilities(&hs, &bath.energies, &w).unwrap();
        let gammas = gamma_exact(&bath.energies, hs.energies(), w.lower, w.width, beta).unwrap();

        let z_q: f64 = hs.energies().iter().map(|&e| (-beta * e).exp()).sum();
        let z_p: f64 = hs
            .energies()
            .iter()
            .zip(gammas.iter())
            .map(|(&e, &g)| (-beta * e + g).exp())
            .sum();
        let lhs = z_q / z_p;
        let rhs: f64 = p
            .iter()
            .zip(gammas.iter())
            .map(|(&pk, &g)| pk * (-g).exp())
            .sum();
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn comparison_beats_bound_in_bulk() {
        let m = 12;
        let bath = build_bath(&BathSpec {
            m,
            eta: 1.0,
            disorder_rel: 0.3,
            seed: 23,
        })
        .unwrap();
        let model = DosModel::new(1.0, m).unwrap();
        // lambda = 20 -> ||H_S|| = eta sqrt(m / lambda).
        let hs_norm = model.eta * (m as f64 / 20.0).sqrt();
        let hs =
            crate::hamiltonians::SystemHamiltonian::new(1, vec![0.0, hs_norm]).unwrap();
        let w = EnergyWindow::new(0.35 * model.center() * 2.0, 1.5).unwrap();
        let cmp =
            counting_comparison(&hs, &bath.energies, &model, &w, BetaReference::LowerEdge)
                .unwrap();
        assert!(cmp.beta > 0.0);
        assert!(
            cmp.distance <= cmp.gamma_bound + cmp.smoothing_slack,
            "distance {} vs gamma bound {} + slack {}",
            cmp.distance,
            cmp.gamma_bound,
            cmp.smoothing_slack
        );
        assert!(
            cmp.distance <= cmp.closed_form_bound + cmp.smoothing_slack,
            "distance {} vs closed form {} + slack {}",
            cmp.distance,
            cmp.closed_form_bound,
            cmp.smoothing_slack
        );
    }
}
