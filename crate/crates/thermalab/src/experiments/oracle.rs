//! Oracle equivalence: gate-level circuit runs against the spectral
//! path, outcome by outcome.

use serde::Serialize;
use serde_json::json;

use crate::circuit::{run_gate_level, CircuitPlan};
use crate::csv::fmt_f64;
use crate::hamiltonians::{build_bath, compose_h0, BathSpec, SystemHamiltonian};
use crate::phaseest::{omega_qc_from_table, outcome_distribution, PhaseEstimationConfig};
use crate::rng::SeedSplitter;
use crate::states::trace_distance;
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct OracleParams {
    pub plans: usize,
    pub max_total_qubits: usize,
    pub eta_energy: f64,
    pub disorder_rel: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            plans: 20,
            max_total_qubits: 12,
            eta_energy: 1.0,
            disorder_rel: 0.05,
        }
    }
}

impl OracleParams {
    pub fn from_config(raw: &crate::experiments::config::RawConfig) -> Result<Self> {
        let mut p = Self::default();
        let s = "oracle-compare";
        if let Some(v) = raw.get_usize(s, "plans")? {
            p.plans = v;
        }
        if let Some(v) = raw.get_usize(s, "max_total_qubits")? {
            p.max_total_qubits = v;
        }
        if let Some(v) = raw.get_f64(s, "eta_energy")? {
            p.eta_energy = v;
        }
        if let Some(v) = raw.get_f64(s, "disorder_rel")? {
            p.disorder_rel = v;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.plans == 0 {
            return Err(crate::Error::InvalidParameter(
                "oracle comparison needs at least one plan".into(),
            ));
        }
        if self.max_total_qubits > crate::circuit::DEFAULT_CIRCUIT_QUBIT_CAP {
            return Err(crate::Error::ResourceCap(format!(
                "max_total_qubits {} exceeds the density-matrix cap {}",
                self.max_total_qubits,
                crate::circuit::DEFAULT_CIRCUIT_QUBIT_CAP
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeComparison {
    pub s_star: u64,
    pub probability_gate: f64,
    pub probability_spectral: f64,
    pub probability_deviation: f64,
    /// Trace distance between the gate-level and spectral
    /// post-measurement states; absent for negligible outcomes.
    pub state_distance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanComparison {
    pub n: usize,
    pub m: usize,
    pub r: u32,
    pub q: u32,
    pub bath_seed: u64,
    pub max_probability_deviation: f64,
    pub max_state_distance: f64,
    pub outcomes: Vec<OutcomeComparison>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub plans: usize,
    pub worst_probability_deviation: f64,
    pub worst_state_distance: f64,
    pub elapsed_seconds: f64,
}

pub struct OracleOutput {
    pub summary: OracleSummary,
    pub comparisons: Vec<PlanComparison>,
    pub report_json: String,
}

/// Deterministic plan shapes covering the qubit budget with every
/// measured-register size `q in 1..=r`.
pub fn plan_shapes(params: &OracleParams) -> Vec<(usize, usize, u32, u32)> {
    let mut shapes = Vec::new();
    let mut budget_cycle = 0u32;
    'outer: for r in 2..=6u32 {
        for q in 1..=r {
            for n in 1..=2usize {
                let m_max = params.max_total_qubits as i64 - n as i64 - r as i64;
                if m_max < 1 {
                    continue;
                }
                // Rotate bath sizes so plans are not all maximal.
                let m = 1 + ((budget_cycle as i64 + q as i64) % m_max) as usize;
                budget_cycle += 1;
                shapes.push((n, m, r, q));
                if shapes.len() >= params.plans {
                    break 'outer;
                }
            }
        }
    }
    shapes
}

pub fn run(params: &OracleParams, root_seed: u64) -> Result<OracleOutput> {
    params.validate()?;
    let start = std::time::Instant::now();
    let splitter = SeedSplitter::new(root_seed);
    let mut comparisons = Vec::new();

    for (idx, (n, m, r, q)) in plan_shapes(params).into_iter().enumerate() {
        let bath_seed = splitter.child_indexed("oracle/bath", idx as u64);
        let bath = build_bath(&BathSpec {
            m,
            eta: params.eta_energy,
            disorder_rel: params.disorder_rel,
            seed: bath_seed,
        })?;
        let mut hs_rng = splitter.rng_indexed("oracle/system", idx as u64);
        let hs = SystemHamiltonian::random(n, params.eta_energy * 0.9, &mut hs_rng);

        let plan = CircuitPlan::new(&hs, &bath, r, q)?;
        let gate_run = run_gate_level(&plan)?;

        let (diag, _) = plan.h0_diagonal();
        let mut energies = diag;
        energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cfg = PhaseEstimationConfig::new(r, q)?;
        let table = outcome_distribution(&energies, &cfg)?;
        // The eigensystem must label bath states in configuration order
        // to share the gate-level register basis.
        let eigs = compose_h0(&hs, &bath.configuration_energies)?;

        let mut max_p_dev = 0.0_f64;
        let mut max_state_dist = 0.0_f64;
        let mut outcomes = Vec::with_capacity(gate_run.outcomes.len());
        for (s_star, outcome) in gate_run.outcomes.iter().enumerate() {
            let spectral_p = table.probability(s_star as u64);
            let deviation = (outcome.probability - spectral_p).abs();
            max_p_dev = max_p_dev.max(deviation);
            let state_distance = match &outcome.post_state {
                Some(gate_state) if spectral_p > 1e-12 => {
                    let spectral_state = omega_qc_from_table(&eigs, &table, s_star as u64)?;
                    let dist = trace_distance(gate_state, &spectral_state)?;
                    max_state_dist = max_state_dist.max(dist);
                    Some(dist)
                }
                _ => None,
            };
            outcomes.push(OutcomeComparison {
                s_star: s_star as u64,
                probability_gate: outcome.probability,
                probability_spectral: spectral_p,
                probability_deviation: deviation,
                state_distance,
            });
        }
        comparisons.push(PlanComparison {
            n,
            m,
            r,
            q,
            bath_seed,
            max_probability_deviation: max_p_dev,
            max_state_distance: max_state_dist,
            outcomes,
        });
    }

    let worst_probability_deviation = comparisons
        .iter()
        .map(|c| c.max_probability_deviation)
        .fold(0.0, f64::max);
    let worst_state_distance = comparisons
        .iter()
        .map(|c| c.max_state_distance)
        .fold(0.0, f64::max);
    let report = json!({
        "plans": comparisons.iter().map(|c| json!({
            "n": c.n,
            "m": c.m,
            "r": c.r,
            "q": c.q,
            "bath_seed": c.bath_seed,
            "max_probability_deviation": fmt_f64(c.max_probability_deviation),
            "max_state_distance": fmt_f64(c.max_state_distance),
            "outcomes": c.outcomes.iter().map(|o| json!({
                "s_star": o.s_star,
                "probability_gate": fmt_f64(o.probability_gate),
                "probability_spectral": fmt_f64(o.probability_spectral),
                "probability_deviation": fmt_f64(o.probability_deviation),
                "state_distance": o.state_distance.map(fmt_f64),
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "worst_probability_deviation": fmt_f64(worst_probability_deviation),
        "worst_state_distance": fmt_f64(worst_state_distance),
    });
    Ok(OracleOutput {
        summary: OracleSummary {
            plans: comparisons.len(),
            worst_probability_deviation,
            worst_state_distance,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        },
        comparisons,
        report_json: serde_json::to_string_pretty(&report)? + "\n",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_cover_q_range_within_budget() {
        let params = OracleParams {
            plans: 24,
            ..Default::default()
        };
        let shapes = plan_shapes(&params);
        assert_eq!(shapes.len(), 24);
        assert!(shapes
            .iter()
            .all(|&(n, m, r, _)| n + m + r as usize <= params.max_total_qubits));
        assert!(shapes.iter().any(|&(_, _, r, q)| q == r));
        assert!(shapes.iter().any(|&(_, _, _, q)| q == 1));
    }

    #[test]
    fn small_oracle_comparison_agrees() {
        let params = OracleParams {
            plans: 3,
            max_total_qubits: 9,
            ..Default::default()
        };
        let out = run(&params, 11).unwrap();
        assert_eq!(out.summary.plans, 3);
        assert!(
            out.summary.worst_probability_deviation <= 1e-10,
            "probability deviation {}",
            out.summary.worst_probability_deviation
        );
        assert!(
            out.summary.worst_state_distance <= 1e-10,
            "state distance {}",
            out.summary.worst_state_distance
        );
    }
}
