//! Equilibration sweep: rectangular initial states evolving under a
//! weakly coupled Hamiltonian, their time-averaged subsystem distance
//! against the dynamic bound, and the kinematic Haar tail.

use serde::Serialize;
use serde_json::json;

use crate::csv::{fmt_f64, Table};
use crate::dynamics::{
    dynamic_equilibration_bound, kinematic_tail_sample, kinematic_threshold, median_gap,
    nondegenerate_gaps, reduced_distance_series, SamplingScheme, TimeSamplingPlan,
};
use crate::experiments::theorem1::{assemble_instance, plan_instance_geometry};
use crate::linalg::CMat;
use crate::perturbation::{epsilon_log_grid, ProjectorCensus, WindowOverlap};
use crate::rng::SeedSplitter;
use crate::states::{rectangular_pure_state, DensityMatrix};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct DynamicsParams {
    pub d_s: usize,
    pub m: usize,
    pub eta_energy: f64,
    pub disorder_rel: f64,
    pub v_over_delta: f64,
    pub window_fraction: f64,
    pub window_position: f64,
    pub n_states: usize,
    pub time_samples: usize,
    pub epsilon_points: usize,
    pub eps_prime: f64,
    pub haar_samples: usize,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            d_s: 2,
            m: 10,
            eta_energy: 1.0,
            disorder_rel: 0.05,
            v_over_delta: 1e-3,
            window_fraction: 0.22,
            window_position: 0.45,
            n_states: 20,
            time_samples: 1000,
            epsilon_points: 32,
            eps_prime: 0.1,
            haar_samples: 500,
        }
    }
}

impl DynamicsParams {
    pub fn from_config(raw: &crate::experiments::config::RawConfig) -> Result<Self> {
        let mut p = Self::default();
        let s = "dynamics";
        if let Some(v) = raw.get_usize(s, "d_s")? {
            p.d_s = v;
        }
        if let Some(v) = raw.get_usize(s, "m")? {
            p.m = v;
        }
        if let Some(v) = raw.get_f64(s, "eta_energy")? {
            p.eta_energy = v;
        }
        if let Some(v) = raw.get_f64(s, "disorder_rel")? {
            p.disorder_rel = v;
        }
        if let Some(v) = raw.get_f64(s, "v_over_delta")? {
            p.v_over_delta = v;
        }
        if let Some(v) = raw.get_f64(s, "window_fraction")? {
            p.window_fraction = v;
        }
        if let Some(v) = raw.get_usize(s, "n_states")? {
            p.n_states = v;
        }
        if let Some(v) = raw.get_usize(s, "time_samples")? {
            p.time_samples = v;
        }
        if let Some(v) = raw.get_usize(s, "epsilon_points")? {
            p.epsilon_points = v;
        }
        if let Some(v) = raw.get_f64(s, "eps_prime")? {
            p.eps_prime = v;
        }
        if let Some(v) = raw.get_usize(s, "haar_samples")? {
            p.haar_samples = v;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.time_samples < 100 || self.haar_samples == 0 {
            return Err(crate::Error::InvalidParameter(
                "dynamics sweep needs n_states >= 1, time_samples >= 100, haar_samples >= 1"
                    .into(),
            ));
        }
        if !self.d_s.is_power_of_two() || self.d_s < 2 {
            return Err(crate::Error::InvalidParameter(
                "dynamics sweep needs a power-of-two d_s >= 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DynamicsSummary {
    pub states: usize,
    pub dynamic_violations: usize,
    pub dynamic_bound: f64,
    pub worst_time_average: f64,
    pub kinematic_threshold: f64,
    pub kinematic_exceedance: f64,
    pub nondegenerate_gaps: bool,
    pub epsilon_opt: f64,
    pub elapsed_seconds: f64,
}

pub struct DynamicsOutput {
    pub summary: DynamicsSummary,
    pub states_csv: String,
    pub timeseries_csv: String,
    pub summary_json: String,
}

pub fn run(params: &DynamicsParams, root_seed: u64) -> Result<DynamicsOutput> {
    params.validate()?;
    let start = std::time::Instant::now();
    let splitter = SeedSplitter::new(root_seed);

    let mut hs_rng = splitter.rng("dynamics/system");
    let geometry = plan_instance_geometry(
        params.d_s,
        params.m,
        params.eta_energy,
        params.disorder_rel,
        params.window_fraction,
        params.window_position,
        splitter.child("dynamics/bath"),
        &mut hs_rng,
    )?;
    let v_norm = params.v_over_delta * geometry.window.width;
    let inst = assemble_instance(&geometry, v_norm, splitter.child("dynamics/coupling"))?;

    // Grid-optimal epsilon for the dynamic bound.
    let grid = epsilon_log_grid(
        inst.h0.min_gap().max(1e-12),
        inst.window.width,
        params.epsilon_points,
    );
    let cache = WindowOverlap::new(&inst.h0, &inst.h, &inst.window)?;
    let mut best: Option<(f64, f64, ProjectorCensus)> = None;
    for &eps in &grid {
        let census = cache.census_at(eps)?;
        let bound = dynamic_equilibration_bound(params.d_s, &census, v_norm)?;
        if best.as_ref().map(|b| bound < b.1).unwrap_or(true) {
            best = Some((eps, bound, census));
        }
    }
    let (epsilon_opt, dynamic_bound, census_opt) =
        best.ok_or_else(|| crate::Error::InvalidParameter("empty epsilon grid".into()))?;

    // Reference: reduced decoupled window mixture.
    let range = inst
        .h0
        .window_range(inst.window.lower, inst.window.width);
    let block = inst.h0.column_block(range);
    let reduced: CMat =
        crate::perturbation::reduce_projector_mixture(&block, (params.d_s, inst.h0.dim() / params.d_s));
    let reference = DensityMatrix::new(reduced, Some((params.d_s, 1)))?;

    let gaps_ok = nondegenerate_gaps(&inst.h.eigenvalues, 1e-12 * inst.h.norm_inf());
    let horizon = 100.0 * std::f64::consts::TAU / median_gap(&inst.h.eigenvalues).max(1e-12);

    let mut states_table = Table::new(vec![
        "state",
        "mean_distance",
        "std_error",
        "samples",
        "bound",
        "within_bound",
    ]);
    let mut timeseries_table = Table::new(vec!["state", "time", "distance"]);
    let mut dynamic_violations = 0usize;
    let mut worst_time_average = 0.0_f64;

    for state_idx in 0..params.n_states {
        let mut state_rng = splitter.rng_indexed("dynamics/state", state_idx as u64);
        let psi0 = rectangular_pure_state(&inst.h, &inst.window, &mut state_rng)?;
        let plan = TimeSamplingPlan {
            horizon,
            samples: params.time_samples,
            scheme: SamplingScheme::UniformRandom,
            seed: splitter.child_indexed("dynamics/times", state_idx as u64),
        };
        let series = reduced_distance_series(&psi0, &inst.h, &reference, &plan)?;
        let n = series.len() as f64;
        let mean = series.iter().map(|p| p.1).sum::<f64>() / n;
        let var = series
            .iter()
            .map(|p| (p.1 - mean) * (p.1 - mean))
            .sum::<f64>()
            / (n - 1.0);
        let std_error = (var / n).sqrt();
        let ok = mean <= dynamic_bound;
        if !ok {
            dynamic_violations += 1;
        }
        worst_time_average = worst_time_average.max(mean);
        states_table.push_row(vec![
            state_idx.to_string(),
            fmt_f64(mean),
            fmt_f64(std_error),
            series.len().to_string(),
            fmt_f64(dynamic_bound),
            ok.to_string(),
        ]);
        if state_idx == 0 {
            for (t, dist) in &series {
                timeseries_table.push_row(vec![
                    state_idx.to_string(),
                    fmt_f64(*t),
                    fmt_f64(*dist),
                ]);
            }
        }
    }

    let threshold = kinematic_threshold(params.d_s, &census_opt, v_norm, params.eps_prime)?;
    let tail = kinematic_tail_sample(
        &inst.h,
        &inst.window,
        &reference,
        threshold,
        params.haar_samples,
        splitter.child("dynamics/haar"),
    )?;

    let summary = DynamicsSummary {
        states: params.n_states,
        dynamic_violations,
        dynamic_bound,
        worst_time_average,
        kinematic_threshold: threshold,
        kinematic_exceedance: tail.exceedance,
        nondegenerate_gaps: gaps_ok,
        epsilon_opt,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    let summary_json = serde_json::to_string_pretty(&json!({
        "params": params,
        "root_seed": root_seed,
        "instance": {
            "d_s": params.d_s,
            "m": params.m,
            "v_norm": fmt_f64(v_norm),
            "window_lower": fmt_f64(inst.window.lower),
            "window_width": fmt_f64(inst.window.width),
            "horizon": fmt_f64(horizon),
        },
        "summary": summary,
    }))? + "\n";

    Ok(DynamicsOutput {
        summary,
        states_csv: states_table.to_csv(),
        timeseries_csv: timeseries_table.to_csv(),
        summary_json,
    })
}
