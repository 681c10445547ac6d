//! End-to-end preparation-algorithm sweep on the spectral path: outcome
//! distributions, prepared-state distances against the Gibbs target, the
//! closed-form error and runtime bounds, and the kernel one-norm grid.

use serde::Serialize;

use crate::csv::{fmt_f64, Table};
use crate::hamiltonians::{build_bath_normalized, compose_h0_spectrum, BathSpec, SystemHamiltonian};
use crate::linalg::KahanSum;
use crate::phaseest::{
    algorithm_error_bound, beta_from_outcome, expected_runs_bound, expected_runs_bound_width_form,
    fg_one_norm, outcome_distribution, s_star_for_beta, PhaseEstimationConfig,
};
use crate::rng::SeedSplitter;
use crate::states::{gibbs_weights, trace_distance_diagonal};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmParams {
    pub n: usize,
    pub ms: Vec<usize>,
    pub lambda: f64,
    pub r_minus_q: Vec<u32>,
    pub q: u32,
    pub hs_norm_energy: f64,
    pub disorder_rel: f64,
    /// Additive slack standing in for the exponentially small constant.
    pub slack: f64,
    /// Optional target inverse temperature: when set, the summary
    /// reports the outcome `s*` the algorithm would repeat for.
    pub beta_target_inv_energy: Option<f64>,
    /// Emit the kernel one-norm grid (r <= 20, r-q in 0..=12).
    pub emit_kernel_grid: bool,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        Self {
            n: 1,
            ms: vec![10, 12],
            lambda: 20.0,
            r_minus_q: vec![8, 10, 12],
            q: 4,
            hs_norm_energy: 1.0,
            disorder_rel: 0.3,
            slack: 0.02,
            beta_target_inv_energy: None,
            emit_kernel_grid: true,
        }
    }
}

impl AlgorithmParams {
    pub fn from_config(raw: &crate::experiments::config::RawConfig) -> Result<Self> {
        let mut p = Self::default();
        let s = "algorithm";
        if let Some(v) = raw.get_usize(s, "n")? {
            p.n = v;
        }
        if let Some(v) = raw.get_list::<usize>(s, "ms")? {
            p.ms = v;
        }
        if let Some(v) = raw.get_f64(s, "lambda")? {
            p.lambda = v;
        }
        if let Some(v) = raw.get_list::<u32>(s, "r_minus_q")? {
            p.r_minus_q = v;
        }
        if let Some(v) = raw.get_u32(s, "q")? {
            p.q = v;
        }
        if let Some(v) = raw.get_f64(s, "hs_norm_energy")? {
            p.hs_norm_energy = v;
        }
        if let Some(v) = raw.get_f64(s, "disorder_rel")? {
            p.disorder_rel = v;
        }
        if let Some(v) = raw.get_f64(s, "slack")? {
            p.slack = v;
        }
        if let Some(v) = raw.get_f64(s, "beta_target_inv_energy")? {
            p.beta_target_inv_energy = Some(v);
        }
        if let Some(v) = raw.get_bool(s, "emit_kernel_grid")? {
            p.emit_kernel_grid = v;
        }
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ms.is_empty() || self.r_minus_q.is_empty() {
            return Err(crate::Error::InvalidParameter(
                "algorithm sweep needs nonempty m and r-q grids".into(),
            ));
        }
        if !(self.lambda > 0.0) || !(self.hs_norm_energy > 0.0) {
            return Err(crate::Error::InvalidParameter(
                "algorithm sweep needs lambda > 0 and hs_norm > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Per-outcome record of one `(m, r)` run.
#[derive(Debug, Clone, Serialize)]
pub struct OutcomeRow {
    pub m: usize,
    pub r: u32,
    pub q: u32,
    pub s_star: u64,
    pub probability: f64,
    pub beta: f64,
    pub admissible: bool,
    pub dist_qc_rect: f64,
    pub dist_rect_gibbs_reduced: f64,
    pub dist_qc_gibbs_reduced: f64,
    pub bound_total: f64,
    pub bound_phase_term: f64,
    pub bound_counting_term: f64,
    pub split_ok: bool,
    pub bound_ok: bool,
    pub kernel_chain_ok: bool,
    pub runs_empirical: f64,
    pub runs_bound: f64,
    pub runs_bound_width_form: f64,
    pub runs_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmSummary {
    pub outcome_rows: usize,
    pub admissible_rows: usize,
    pub split_violations: usize,
    pub bound_passes: usize,
    pub bound_pass_fraction: f64,
    pub runs_violations: usize,
    pub kernel_chain_violations: usize,
    pub runs_monotone_ok: bool,
    pub target_outcome: Option<u64>,
    pub elapsed_seconds: f64,
}

pub struct AlgorithmOutput {
    pub summary: AlgorithmSummary,
    pub rows: Vec<OutcomeRow>,
    pub outcomes_csv: String,
    pub kernel_csv: String,
}

/// Equal-weight window populations of the uncoupled spectrum for outcome
/// `s*`: the ideal rectangular diagonal.
fn rectangular_weights(
    energies: &[f64],
    norm: f64,
    cfg: &PhaseEstimationConfig,
    s_star: u64,
) -> Vec<f64> {
    let lower = cfg.window_lower(norm, s_star);
    let width = cfg.window_width(norm);
    let start = energies.partition_point(|&e| e < lower);
    let end = energies.partition_point(|&e| e < lower + width);
    let count = end - start;
    let mut w = vec![0.0; energies.len()];
    if count > 0 {
        for entry in w.iter_mut().take(end).skip(start) {
            *entry = 1.0 / count as f64;
        }
    }
    w
}

/// Reduce diagonal weights over the bath labels to system populations.
fn reduce_by_labels(weights: &[f64], labels: &[(usize, usize)], d_s: usize) -> Vec<f64> {
    let mut acc = vec![KahanSum::new(); d_s];
    for (w, &(i, _)) in weights.iter().zip(labels.iter()) {
        acc[i].add(*w);
    }
    acc.iter().map(|k| k.value()).collect()
}

pub fn run(params: &AlgorithmParams, root_seed: u64) -> Result<AlgorithmOutput> {
    params.validate()?;
    let start = std::time::Instant::now();
    let splitter = SeedSplitter::new(root_seed);
    let mut rows: Vec<OutcomeRow> = Vec::new();
    let mut table = Table::new(vec![
        "m",
        "r",
        "q",
        "s_star",
        "probability",
        "beta",
        "admissible",
        "dist_qc_rect",
        "dist_rect_gibbs_reduced",
        "dist_qc_gibbs_reduced",
        "bound_total",
        "bound_phase_term",
        "bound_counting_term",
        "split_ok",
        "bound_ok",
        "kernel_chain_ok",
        "runs_empirical",
        "runs_bound",
        "runs_bound_width_form",
        "runs_ok",
    ]);

    let mut runs_monotone_ok = true;
    let mut target_outcome = None;

    for (mi, &m) in params.ms.iter().enumerate() {
        let eta = (params.lambda / m as f64).sqrt() * params.hs_norm_energy;
        let bath_spec = BathSpec {
            m,
            eta,
            disorder_rel: params.disorder_rel,
            seed: splitter.child_indexed("algorithm/bath", mi as u64),
        };
        let bath = build_bath_normalized(&bath_spec)?;
        let mut hs_rng = splitter.rng_indexed("algorithm/system", mi as u64);
        let hs = SystemHamiltonian::random(params.n, params.hs_norm_energy, &mut hs_rng);
        let spectrum = compose_h0_spectrum(&hs, &bath.energies);
        let norm = spectrum.norm_inf();
        let hs_norm = hs.norm_inf();

        for &rq in &params.r_minus_q {
            let cfg = PhaseEstimationConfig::new(params.q + rq, params.q)?;
            let outcome_table = outcome_distribution(&spectrum.eigenvalues, &cfg)?;
            let kernel = fg_one_norm(&cfg)?;
            let profile = |beta: f64| -> f64 {
                (2.0 / params.lambda
                    + beta * hs_norm
                    + params.lambda * hs_norm * hs_norm * beta * beta / 8.0)
                    .exp()
            };

            if let Some(beta_target) = params.beta_target_inv_energy {
                if let Ok(s) = s_star_for_beta(beta_target, params.q, &bath_spec, hs_norm) {
                    target_outcome = Some(s);
                }
            }

            // Monotone-runs scan over a positive-beta grid (checked per
            // (m, r) pair on distinct outcomes).
            let mut last_runs = 0.0_f64;
            let mut last_s = u64::MAX;
            for j in 0..5 {
                let beta = 0.1 / eta + (1.6 / eta - 0.1 / eta) * j as f64 / 4.0;
                if let Ok(s) = s_star_for_beta(beta, params.q, &bath_spec, hs_norm) {
                    if s == last_s {
                        continue;
                    }
                    let p = outcome_table.probability(s);
                    if p > 0.0 {
                        let runs = 1.0 / p;
                        if runs + 1e-9 < last_runs {
                            runs_monotone_ok = false;
                        }
                        last_runs = runs;
                        last_s = s;
                    }
                }
            }

            for s_star in 0..cfg.num_outcomes() {
                let probability = outcome_table.probability(s_star);
                let beta = beta_from_outcome(s_star, params.q, &bath_spec, hs_norm);
                let e_lower = cfg.window_lower(norm, s_star);
                // Admissible: positive temperature, the working range
                // E >= ||H_S|| of the counting argument, and an outcome
                // that actually occurs.
                let admissible = beta >= 0.0 && e_lower >= hs_norm && probability > 1e-9;
                let rect = rectangular_weights(&spectrum.eigenvalues, norm, &cfg, s_star);
                let rect_total: f64 = rect.iter().sum();
                if rect_total == 0.0 || probability <= 0.0 {
                    continue;
                }
                let qc = outcome_table.omega_qc_weights(s_star)?;
                let dist_qc_rect = trace_distance_diagonal(&qc, &rect);

                let qc_reduced = reduce_by_labels(&qc, &spectrum.labels, spectrum.d_s);
                let rect_reduced = reduce_by_labels(&rect, &spectrum.labels, spectrum.d_s);
                let gibbs = gibbs_weights(hs.energies(), beta.max(0.0));
                let dist_rect_gibbs = trace_distance_diagonal(&rect_reduced, &gibbs);
                let dist_qc_gibbs = trace_distance_diagonal(&qc_reduced, &gibbs);

                // Error split: reduced target distance never exceeds the
                // full rectangular deviation plus the counting part.
                let split_ok = dist_qc_gibbs <= dist_qc_rect + dist_rect_gibbs + 1e-10;
                let bound = algorithm_error_bound(&cfg, params.lambda, beta.max(0.0), hs_norm)?;
                let bound_ok = dist_qc_gibbs <= bound.total() + params.slack;
                let kernel_chain_ok =
                    dist_qc_rect <= profile(beta.max(0.0)) * kernel.numeric + params.slack;

                let runs_empirical = 1.0 / probability;
                let runs_bound =
                    expected_runs_bound(params.q, m, params.lambda, beta.max(0.0), hs_norm);
                let runs_bound_width =
                    expected_runs_bound_width_form(
                        cfg.window_width(norm),
                        params.lambda,
                        beta.max(0.0),
                        hs_norm,
                    );
                let runs_ok = !admissible || runs_empirical <= runs_bound;

                let row = OutcomeRow {
                    m,
                    r: cfg.r,
                    q: cfg.q,
                    s_star,
                    probability,
                    beta,
                    admissible,
                    dist_qc_rect,
                    dist_rect_gibbs_reduced: dist_rect_gibbs,
                    dist_qc_gibbs_reduced: dist_qc_gibbs,
                    bound_total: bound.total(),
                    bound_phase_term: bound.phase_estimation_term,
                    bound_counting_term: bound.counting_term,
                    split_ok,
                    bound_ok,
                    kernel_chain_ok,
                    runs_empirical,
                    runs_bound,
                    runs_bound_width_form: runs_bound_width,
                    runs_ok,
                };
                table.push_row(vec![
                    row.m.to_string(),
                    row.r.to_string(),
                    row.q.to_string(),
                    row.s_star.to_string(),
                    fmt_f64(row.probability),
                    fmt_f64(row.beta),
                    row.admissible.to_string(),
                    fmt_f64(row.dist_qc_rect),
                    fmt_f64(row.dist_rect_gibbs_reduced),
                    fmt_f64(row.dist_qc_gibbs_reduced),
                    fmt_f64(row.bound_total),
                    fmt_f64(row.bound_phase_term),
                    fmt_f64(row.bound_counting_term),
                    row.split_ok.to_string(),
                    row.bound_ok.to_string(),
                    row.kernel_chain_ok.to_string(),
                    fmt_f64(row.runs_empirical),
                    fmt_f64(row.runs_bound),
                    fmt_f64(row.runs_bound_width_form),
                    row.runs_ok.to_string(),
                ]);
                rows.push(row);
            }
        }
    }

    let kernel_csv = if params.emit_kernel_grid {
        kernel_grid_csv()?
    } else {
        String::new()
    };

    let admissible: Vec<&OutcomeRow> = rows.iter().filter(|r| r.admissible).collect();
    let split_violations = rows.iter().filter(|r| !r.split_ok).count();
    let bound_passes = admissible.iter().filter(|r| r.bound_ok).count();
    let runs_violations = admissible.iter().filter(|r| !r.runs_ok).count();
    let kernel_chain_violations = admissible.iter().filter(|r| !r.kernel_chain_ok).count();
    let summary = AlgorithmSummary {
        outcome_rows: rows.len(),
        admissible_rows: admissible.len(),
        split_violations,
        bound_passes,
        bound_pass_fraction: if admissible.is_empty() {
            1.0
        } else {
            bound_passes as f64 / admissible.len() as f64
        },
        runs_violations,
        kernel_chain_violations,
        runs_monotone_ok,
        target_outcome,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(AlgorithmOutput {
        summary,
        rows,
        outcomes_csv: table.to_csv(),
        kernel_csv,
    })
}

/// Kernel one-norm grid: numeric vs closed form for `r <= 20`,
/// `r - q in 0..=12`.
pub fn kernel_grid_csv() -> Result<String> {
    let mut table = Table::new(vec![
        "r",
        "q",
        "r_minus_q",
        "one_norm_numeric",
        "one_norm_closed_form",
        "within_bound",
    ]);
    for r in 1..=20u32 {
        for gap in 0..=12u32.min(r - 1) {
            let q = r - gap;
            let cfg = PhaseEstimationConfig::new(r, q)?;
            let norm = fg_one_norm(&cfg)?;
            table.push_row(vec![
                r.to_string(),
                q.to_string(),
                gap.to_string(),
                fmt_f64(norm.numeric),
                fmt_f64(norm.closed_form),
                (norm.numeric <= norm.closed_form + 1e-12).to_string(),
            ]);
        }
    }
    Ok(table.to_csv())
}
