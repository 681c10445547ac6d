//! Reproducible experiment drivers: every run resolves its parameters
//! from a config (or defaults), derives all randomness from one root
//! seed through labeled streams, and emits CSV/JSON artifacts plus a
//! manifest describing exactly what was run.

pub mod algorithm;
pub mod config;
pub mod counting;
pub mod dynamics;
pub mod oracle;
pub mod plot;
pub mod theorem1;

use serde_json::json;

use crate::Result;
use config::{ExperimentConfig, ExperimentKind};

/// One output file of a run.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

/// Everything a run produced.
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub summary_line: String,
}

fn manifest(
    kind: ExperimentKind,
    seed: u64,
    params: serde_json::Value,
    outputs: &[Artifact],
    summary: serde_json::Value,
) -> Result<Artifact> {
    let value = json!({
        "tool": "thermalab",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": kind.name(),
        "root_seed": seed,
        "resolved_parameters": params,
        "outputs": outputs.iter().map(|a| a.name.clone()).collect::<Vec<_>>(),
        "summary": summary,
    });
    Ok(Artifact {
        name: "manifest.json".into(),
        content: serde_json::to_string_pretty(&value)? + "\n",
    })
}

/// Run the experiment described by `config` and return its artifacts.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match cfg.kind {
        ExperimentKind::Theorem1 => {
            let params = theorem1::Theorem1Params::from_config(&cfg.raw)?;
            let out = theorem1::run(&params, cfg.seed)?;
            let mut artifacts = vec![Artifact {
                name: "theorem1_instances.csv".into(),
                content: out.instances_csv,
            }];
            if params.emit_grid {
                artifacts.push(Artifact {
                    name: "theorem1_epsilon_grid.csv".into(),
                    content: out.grid_csv,
                });
            }
            let summary_line = format!(
                "theorem1: {} instances, {} bound violations, {} proof-step violations",
                out.summary.instances,
                out.summary.violations_theorem1,
                out.summary.violations_interior_norm
            );
            artifacts.push(manifest(
                cfg.kind,
                cfg.seed,
                serde_json::to_value(&params)?,
                &artifacts,
                serde_json::to_value(&out.summary)?,
            )?);
            Ok(RunOutput {
                artifacts,
                summary_line,
            })
        }
        ExperimentKind::Counting => {
            let params = counting::CountingParams::from_config(&cfg.raw)?;
            let out = counting::run(&params, cfg.seed)?;
            let mut artifacts = vec![Artifact {
                name: "counting.csv".into(),
                content: out.csv,
            }];
            let summary_line = format!(
                "counting: {}/{} placements passed (worst slack {:.4})",
                out.summary.passed, out.summary.rows, out.summary.worst_slack
            );
            artifacts.push(manifest(
                cfg.kind,
                cfg.seed,
                serde_json::to_value(&params)?,
                &artifacts,
                serde_json::to_value(&out.summary)?,
            )?);
            Ok(RunOutput {
                artifacts,
                summary_line,
            })
        }
        ExperimentKind::Algorithm => {
            let params = algorithm::AlgorithmParams::from_config(&cfg.raw)?;
            let out = algorithm::run(&params, cfg.seed)?;
            let mut artifacts = vec![Artifact {
                name: "algorithm_outcomes.csv".into(),
                content: out.outcomes_csv,
            }];
            if params.emit_kernel_grid {
                artifacts.push(Artifact {
                    name: "fg_norms.csv".into(),
                    content: out.kernel_csv,
                });
            }
            let summary_line = format!(
                "algorithm: {} outcomes ({} admissible), bound pass fraction {:.3}, {} split violations",
                out.summary.outcome_rows,
                out.summary.admissible_rows,
                out.summary.bound_pass_fraction,
                out.summary.split_violations
            );
            artifacts.push(manifest(
                cfg.kind,
                cfg.seed,
                serde_json::to_value(&params)?,
                &artifacts,
                serde_json::to_value(&out.summary)?,
            )?);
            Ok(RunOutput {
                artifacts,
                summary_line,
            })
        }
        ExperimentKind::OracleCompare => {
            let params = oracle::OracleParams::from_config(&cfg.raw)?;
            let out = oracle::run(&params, cfg.seed)?;
            let mut artifacts = vec![Artifact {
                name: "oracle_compare.json".into(),
                content: out.report_json,
            }];
            let summary_line = format!(
                "oracle-compare: {} plans, worst probability deviation {:.3e}, worst state distance {:.3e}",
                out.summary.plans,
                out.summary.worst_probability_deviation,
                out.summary.worst_state_distance
            );
            artifacts.push(manifest(
                cfg.kind,
                cfg.seed,
                serde_json::to_value(&params)?,
                &artifacts,
                serde_json::to_value(&out.summary)?,
            )?);
            Ok(RunOutput {
                artifacts,
                summary_line,
            })
        }
        ExperimentKind::Dynamics => {
            let params = dynamics::DynamicsParams::from_config(&cfg.raw)?;
            let out = dynamics::run(&params, cfg.seed)?;
            let mut artifacts = vec![
                Artifact {
                    name: "dynamics_states.csv".into(),
                    content: out.states_csv,
                },
                Artifact {
                    name: "dynamics_timeseries.csv".into(),
                    content: out.timeseries_csv,
                },
                Artifact {
                    name: "dynamics_summary.json".into(),
                    content: out.summary_json,
                },
            ];
            let summary_line = format!(
                "dynamics: {} states, {} bound violations, kinematic exceedance {:.4}",
                out.summary.states, out.summary.dynamic_violations, out.summary.kinematic_exceedance
            );
            artifacts.push(manifest(
                cfg.kind,
                cfg.seed,
                serde_json::to_value(&params)?,
                &artifacts,
                serde_json::to_value(&out.summary)?,
            )?);
            Ok(RunOutput {
                artifacts,
                summary_line,
            })
        }
    }
}

/// Write artifacts under `dir`, creating it if needed.
pub fn write_artifacts(dir: &std::path::Path, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for artifact in artifacts {
        std::fs::write(dir.join(&artifact.name), &artifact.content)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispatch_runs_and_writes_manifest() {
        let cfg = ExperimentConfig::from_text(
            "[experiment]\nkind = oracle-compare\nseed = 3\n\n[oracle-compare]\nplans = 2\nmax_total_qubits = 8\n",
        )
        .unwrap();
        let out = run(&cfg).unwrap();
        assert!(out.artifacts.iter().any(|a| a.name == "manifest.json"));
        assert!(out.artifacts.iter().any(|a| a.name == "oracle_compare.json"));
        let manifest = out
            .artifacts
            .iter()
            .find(|a| a.name == "manifest.json")
            .unwrap();
        assert!(manifest.content.contains("\"root_seed\": 3"));
        assert!(manifest.content.contains("\"experiment\": \"oracle-compare\""));
    }
}
