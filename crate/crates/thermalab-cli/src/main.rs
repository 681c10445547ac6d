//! Experiment runner for the thermalab numerical laboratory.
//!
//! Every subcommand resolves its parameters from an optional config file
//! plus command-line overrides, runs the corresponding sweep, and writes
//! CSV/JSON artifacts with a manifest into the output directory. All
//! randomness derives from one root seed, so reruns with identical
//! arguments produce byte-identical outputs.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use thermalab::experiments::config::{ExperimentConfig, ExperimentKind, RawConfig};
use thermalab::experiments::{self, plot, Artifact};

#[derive(Parser)]
#[command(
    name = "thermalab",
    version,
    about = "Thermalization bounds and Gibbs-state preparation laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Root seed for all randomness.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory for artifacts.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Optional config file (sectioned key = value text).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the window-perturbation inequalities on random instances.
    VerifyTheorem1 {
        #[command(flatten)]
        common: Common,
        /// Number of random instances (alias: --seeds).
        #[arg(long, alias = "seeds")]
        instances: Option<usize>,
        /// Points of the epsilon grid.
        #[arg(long)]
        epsilon_points: Option<usize>,
    },
    /// Verify the level-counting bound against exact spectrum distances.
    VerifyCounting {
        #[command(flatten)]
        common: Common,
        /// Window placements per (m, lambda) combination.
        #[arg(long)]
        windows: Option<usize>,
    },
    /// Run the preparation algorithm spectrally and check all bounds.
    RunAlgorithm {
        #[command(flatten)]
        common: Common,
        /// System qubits.
        #[arg(long)]
        n: Option<usize>,
        /// Bath spins.
        #[arg(long)]
        m: Option<usize>,
        /// Bath scale ratio lambda = eta^2 m / ||H_S||^2.
        #[arg(long)]
        lambda: Option<f64>,
        /// Total ancilla qubits (needs --q so r - q is determined).
        #[arg(long)]
        r: Option<u32>,
        /// Measured ancilla qubits.
        #[arg(long)]
        q: Option<u32>,
        /// Target inverse temperature (reports the outcome to repeat for).
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Gate-level vs spectral-path oracle comparison.
    OracleCompare {
        #[command(flatten)]
        common: Common,
        /// Number of plans.
        #[arg(long)]
        plans: Option<usize>,
        /// Total qubit cap per plan.
        #[arg(long)]
        max_qubits: Option<usize>,
    },
    /// Time-averaged equilibration and Haar-tail sampling.
    Dynamics {
        #[command(flatten)]
        common: Common,
        /// Number of rectangular initial states.
        #[arg(long)]
        states: Option<usize>,
        /// Time samples per state.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Render SVG plots from a results directory.
    Plot {
        /// Directory containing result CSV files.
        #[arg(long, default_value = "results")]
        results: PathBuf,
    },
}

fn load_config(common: &Common, kind: ExperimentKind) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let cfg = ExperimentConfig::from_text(&text)?;
            if cfg.kind != kind {
                bail!(
                    "config declares kind `{}` but the subcommand runs `{}`",
                    cfg.kind.name(),
                    kind.name()
                );
            }
            cfg
        }
        None => ExperimentConfig {
            kind,
            seed: common.seed,
            raw: RawConfig::default(),
        },
    };
    cfg.seed = common.seed;
    Ok(cfg)
}

fn apply_overrides(
    cfg: &mut ExperimentConfig,
    section: &str,
    overrides: &[(&str, String)],
) {
    for (key, value) in overrides {
        cfg.raw.set(section, key, value);
    }
}

fn run_and_write(cfg: &ExperimentConfig, out: &PathBuf) -> anyhow::Result<()> {
    let output = experiments::run(cfg)?;
    experiments::write_artifacts(out, &output.artifacts)?;
    println!("{}", output.summary_line);
    for artifact in &output.artifacts {
        println!("  wrote {}", out.join(&artifact.name).display());
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::VerifyTheorem1 {
            common,
            instances,
            epsilon_points,
        } => {
            let mut cfg = load_config(&common, ExperimentKind::Theorem1)?;
            let mut overrides = Vec::new();
            if let Some(v) = instances {
                overrides.push(("instances", v.to_string()));
            }
            if let Some(v) = epsilon_points {
                overrides.push(("epsilon_points", v.to_string()));
            }
            apply_overrides(&mut cfg, "theorem1", &overrides);
            run_and_write(&cfg, &common.out)
        }
        Command::VerifyCounting { common, windows } => {
            let mut cfg = load_config(&common, ExperimentKind::Counting)?;
            let mut overrides = Vec::new();
            if let Some(v) = windows {
                overrides.push(("windows_per_combo", v.to_string()));
            }
            apply_overrides(&mut cfg, "counting", &overrides);
            run_and_write(&cfg, &common.out)
        }
        Command::RunAlgorithm {
            common,
            n,
            m,
            lambda,
            r,
            q,
            beta,
        } => {
            let mut cfg = load_config(&common, ExperimentKind::Algorithm)?;
            let mut overrides = Vec::new();
            if let Some(v) = n {
                overrides.push(("n", v.to_string()));
            }
            if let Some(v) = m {
                overrides.push(("ms", v.to_string()));
            }
            if let Some(v) = lambda {
                overrides.push(("lambda", v.to_string()));
            }
            if let (Some(r), Some(q)) = (r, q) {
                if r < q {
                    bail!("need q <= r, got r = {r}, q = {q}");
                }
                overrides.push(("q", q.to_string()));
                overrides.push(("r_minus_q", (r - q).to_string()));
            } else if let Some(q) = q {
                overrides.push(("q", q.to_string()));
            } else if r.is_some() {
                bail!("--r requires --q so r - q is determined");
            }
            if let Some(v) = beta {
                overrides.push(("beta_target_inv_energy", v.to_string()));
            }
            apply_overrides(&mut cfg, "algorithm", &overrides);
            run_and_write(&cfg, &common.out)
        }
        Command::OracleCompare {
            common,
            plans,
            max_qubits,
        } => {
            let mut cfg = load_config(&common, ExperimentKind::OracleCompare)?;
            let mut overrides = Vec::new();
            if let Some(v) = plans {
                overrides.push(("plans", v.to_string()));
            }
            if let Some(v) = max_qubits {
                overrides.push(("max_total_qubits", v.to_string()));
            }
            apply_overrides(&mut cfg, "oracle-compare", &overrides);
            run_and_write(&cfg, &common.out)
        }
        Command::Dynamics {
            common,
            states,
            samples,
        } => {
            let mut cfg = load_config(&common, ExperimentKind::Dynamics)?;
            let mut overrides = Vec::new();
            if let Some(v) = states {
                overrides.push(("n_states", v.to_string()));
            }
            if let Some(v) = samples {
                overrides.push(("time_samples", v.to_string()));
            }
            apply_overrides(&mut cfg, "dynamics", &overrides);
            run_and_write(&cfg, &common.out)
        }
        Command::Plot { results } => {
            let mut inputs = Vec::new();
            for entry in std::fs::read_dir(&results)
                .with_context(|| format!("reading results directory {}", results.display()))?
            {
                let entry = entry?;
                let name = entry.file_name().to_string_lossy().to_string();
                if name.ends_with(".csv") {
                    inputs.push((name, std::fs::read_to_string(entry.path())?));
                }
            }
            inputs.sort_by(|a, b| a.0.cmp(&b.0));
            let (outputs, warnings) = plot::plot_files(&inputs)?;
            for warning in &warnings {
                eprintln!("warning: {warning}");
            }
            if outputs.is_empty() && warnings.is_empty() {
                eprintln!(
                    "warning: no plottable CSV files found in {}",
                    results.display()
                );
            }
            let artifacts: Vec<Artifact> = outputs
                .into_iter()
                .map(|(name, content)| Artifact { name, content })
                .collect();
            experiments::write_artifacts(&results, &artifacts)?;
            for artifact in &artifacts {
                println!("  wrote {}", results.join(&artifact.name).display());
            }
            Ok(())
        }
    }
}
