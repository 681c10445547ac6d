//! Counting-bound verification sweep: the reduced decoupled window
//! mixture against the Gibbs state at the model temperature, across bath
//! sizes, coupling-scale ratios `lambda`, and random bulk windows.

use rand::Rng;
use serde::Serialize;

use crate::counting::{counting_comparison, BetaReference, DosModel};
use crate::csv::{fmt_f64, Table};
use crate::hamiltonians::{build_bath_normalized, BathSpec, SystemHamiltonian};
use crate::rng::SeedSplitter;
use crate::states::EnergyWindow;
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct CountingParams {
    pub ms: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub windows_per_combo: usize,
    pub eta_energy: f64,
    /// Smoothability-calibrated default; 0.05 leaves the spectrum a comb
    /// of narrow clusters that sub-eta windows resolve.
    pub disorder_rel: f64,
    pub d_s: usize,
    pub delta_over_eta_min: f64,
    pub delta_over_eta_max: f64,
    /// Pass gate on the calibrated smoothing slack.
    pub slack_cap: f64,
    pub use_midpoint_beta: bool,
}

impl Default for CountingParams {
    fn default() -> Self {
        Self {
            ms: vec![12, 14, 16],
            lambdas: vec![5.0, 10.0, 20.0],
            windows_per_combo: 12,
            eta_energy: 1.0,
            disorder_rel: 0.3,
            d_s: 2,
            delta_over_eta_min: 1.0,
            delta_over_eta_max: 4.0,
            slack_cap: 0.02,
            use_midpoint_beta: false,
        }
    }
}

impl CountingParams {
    pub fn from_config(raw: &crate::experiments::config::RawConfig) -> Result<Self> {
        let mut p = Self::default();
        let s = "counting";
        if let Some(v) = raw.get_list::<usize>(s, "ms")? {
            p.ms = v;
        }
        if let Some(v) = raw.get_list::<f64>(s, "lambdas")? {
            p.lambdas = v;
        }
        if let Some(v) = raw.get_usize(s, "windows_per_combo")? {
            p.windows_per_combo = v;
        }
        if let Some(v) = raw.get_f64(s, "eta_energy")? {
            p.eta_energy = v;
        }
        if let Some(v) = raw.get_f64(s, "disorder_rel")? {
            p.disorder_rel = v;
        }
        if let Some(v) = raw.get_usize(s, "d_s")? {
            p.d_s = v;
        }
        if let Some(v) = raw.get_f64(s, "delta_over_eta_min")? {
            p.delta_over_eta_min = v;
        }
        if let Some(v) = raw.get_f64(s, "delta_over_eta_max")? {
            p.delta_over_eta_max = v;
        }
        if let Some(v) = raw.get_f64(s, "slack_cap")? {
            p.slack_cap = v;
        }
        if let Some(v) = raw.get_bool(s, "use_midpoint_beta")? {
            p.use_midpoint_beta = v;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ms.is_empty() || self.lambdas.is_empty() || self.windows_per_combo == 0 {
            return Err(crate::Error::InvalidParameter(
                "counting sweep needs nonempty m, lambda, and window grids".into(),
            ));
        }
        if !self.d_s.is_power_of_two() || self.d_s < 2 {
            return Err(crate::Error::InvalidParameter(
                "counting sweep needs a power-of-two d_s >= 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CountingSummary {
    pub rows: usize,
    pub passed: usize,
    pub pass_fraction: f64,
    pub worst_distance: f64,
    pub worst_slack: f64,
    pub elapsed_seconds: f64,
}

pub struct CountingOutput {
    pub summary: CountingSummary,
    pub csv: String,
}

pub fn run(params: &CountingParams, root_seed: u64) -> Result<CountingOutput> {
    params.validate()?;
    let start = std::time::Instant::now();
    let splitter = SeedSplitter::new(root_seed);
    let mut table = Table::new(vec![
        "m",
        "lambda",
        "d_s",
        "hs_norm",
        "e_lower",
        "delta",
        "beta",
        "dist_exact",
        "gamma_bound",
        "counting_bound",
        "smoothing_slack",
        "hs_norm_exceeds_e",
        "passed",
    ]);
    let mut passed = 0usize;
    let mut rows = 0usize;
    let mut worst_distance = 0.0_f64;
    let mut worst_slack = 0.0_f64;

    let beta_ref = if params.use_midpoint_beta {
        BetaReference::Midpoint
    } else {
        BetaReference::LowerEdge
    };
    let n = params.d_s.trailing_zeros() as usize;

    for (ci, &m) in params.ms.iter().enumerate() {
        for (cj, &lambda) in params.lambdas.iter().enumerate() {
            let combo = (ci * params.lambdas.len() + cj) as u64;
            let bath = build_bath_normalized(&BathSpec {
                m,
                eta: params.eta_energy,
                disorder_rel: params.disorder_rel,
                seed: splitter.child_indexed("counting/bath", combo),
            })?;
            let model = DosModel::new(params.eta_energy, m)?;
            let hs_norm = params.eta_energy * (m as f64 / lambda).sqrt();
            let mut hs_rng = splitter.rng_indexed("counting/system", combo);
            let hs = SystemHamiltonian::random(n, hs_norm, &mut hs_rng);
            let mut window_rng = splitter.rng_indexed("counting/windows", combo);

            for _ in 0..params.windows_per_combo {
                let delta = params.eta_energy
                    * (params.delta_over_eta_min
                        + (params.delta_over_eta_max - params.delta_over_eta_min)
                            * window_rng.gen::<f64>());
                // Positive-temperature bulk: below the profile center,
                // at least ||H_S|| above the spectrum bottom so every
                // shifted bath window stays populated.
                let center = model.center();
                let sigma = model.sigma();
                let lo = (center - 2.0 * sigma).max(hs_norm * 1.05);
                let hi = (center - 0.4 * sigma - delta).max(lo + 0.1 * sigma);
                let e_lower = lo + (hi - lo) * window_rng.gen::<f64>();
                let window = EnergyWindow::new(e_lower, delta)?;
                let cmp =
                    counting_comparison(&hs, &bath.energies, &model, &window, beta_ref)?;
                let row_pass = cmp.distance <= cmp.closed_form_bound + cmp.smoothing_slack
                    && cmp.smoothing_slack <= params.slack_cap;
                if row_pass {
                    passed += 1;
                }
                rows += 1;
                worst_distance = worst_distance.max(cmp.distance);
                worst_slack = worst_slack.max(cmp.smoothing_slack);
                table.push_row(vec![
                    m.to_string(),
                    fmt_f64(lambda),
                    params.d_s.to_string(),
                    fmt_f64(hs_norm),
                    fmt_f64(e_lower),
                    fmt_f64(delta),
                    fmt_f64(cmp.beta),
                    fmt_f64(cmp.distance),
                    fmt_f64(cmp.gamma_bound),
                    fmt_f64(cmp.closed_form_bound),
                    fmt_f64(cmp.smoothing_slack),
                    cmp.hs_norm_exceeds_e.to_string(),
                    row_pass.to_string(),
                ]);
            }
        }
    }

    Ok(CountingOutput {
        summary: CountingSummary {
            rows,
            passed,
            pass_fraction: passed as f64 / rows as f64,
            worst_distance,
            worst_slack,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        },
        csv: table.to_csv(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counting_sweep_passes() {
        let params = CountingParams {
            ms: vec![12],
            lambdas: vec![5.0, 20.0],
            windows_per_combo: 4,
            ..Default::default()
        };
        let out = run(&params, 31).unwrap();
        assert_eq!(out.summary.rows, 8);
        assert!(
            out.summary.pass_fraction >= 0.95,
            "pass fraction {} (worst distance {}, worst slack {})",
            out.summary.pass_fraction,
            out.summary.worst_distance,
            out.summary.worst_slack
        );
    }

    #[test]
    fn counting_sweep_deterministic() {
        let params = CountingParams {
            ms: vec![12],
            lambdas: vec![10.0],
            windows_per_combo: 2,
            ..Default::default()
        };
        let a = run(&params, 5).unwrap();
        let b = run(&params, 5).unwrap();
        assert_eq!(a.csv, b.csv);
    }
}
