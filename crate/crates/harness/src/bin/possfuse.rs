use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use possfuse::fusion::FusionMode;
use possfuse_harness::{compare, run_experiment, ExperimentConfig, Filter};

#[derive(Parser)]
#[command(name = "possfuse", version, about = "Multi-sensor multi-target tracking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Possibilistic,
    Probabilistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Centralised,
    Decentralised,
    Sequential,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write results to a directory.
    Run {
        /// JSON experiment config; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        filter: Option<FilterArg>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        scans: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = ["4", "8"])]
        sensors: Option<String>,
        #[arg(long)]
        gossip_rounds: Option<usize>,
        #[arg(long)]
        ospa_cutoff: Option<f64>,
        #[arg(long)]
        ospa_order: Option<f64>,
        /// Skip pruning, merging and capping.
        #[arg(long)]
        disable_maintenance: bool,
        /// Augment each scan with birth components at every observation.
        #[arg(long)]
        birth_augment: bool,
        /// Also write one trace CSV per run.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Compare two results files (or result directories), A minus B.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            filter,
            mode,
            runs,
            scans,
            seed,
            sensors,
            gossip_rounds,
            ospa_cutoff,
            ospa_order,
            disable_maintenance,
            birth_augment,
            trace,
            out,
        } => {
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
                None => ExperimentConfig::default(),
            };
            if let Some(f) = filter {
                cfg.filter = match f {
                    FilterArg::Possibilistic => Filter::Possibilistic,
                    FilterArg::Probabilistic => Filter::Probabilistic,
                };
            }
            if let Some(m) = mode {
                cfg.mode = match m {
                    ModeArg::Centralised => FusionMode::Centralised,
                    ModeArg::Decentralised => FusionMode::Decentralised,
                    ModeArg::Sequential => FusionMode::Sequential,
                };
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            if let Some(k) = scans {
                cfg.scenario.scans = k;
            }
            if let Some(s) = seed {
                cfg.scenario.seed = s;
            }
            if let Some(n) = sensors {
                cfg.scenario.n_sensors = n.parse()?;
            }
            if let Some(l) = gossip_rounds {
                cfg.gossip_rounds = l;
            }
            if let Some(c) = ospa_cutoff {
                cfg.ospa.cutoff = c;
            }
            if let Some(p) = ospa_order {
                cfg.ospa.order = p;
            }
            cfg.disable_maintenance |= disable_maintenance;
            cfg.birth_augment |= birth_augment;
            cfg.validate()?;

            let summary = run_experiment(&cfg, &out, trace)?;
            emit(&format!(
                "{} {} n={} runs={}: mean OSPA {:.3}, mean precision {}\nwrote {}",
                summary.filter,
                summary.mode,
                summary.sensors,
                summary.runs,
                summary.ospa_mean,
                summary.precision_mean.map_or("-".into(), |p| format!("{p:.3}")),
                out.display()
            ));
        }
        Command::Compare { a, b, json } => {
            let c = compare(&a, &b)?;
            if json {
                emit(&serde_json::to_string_pretty(&c)?);
            } else {
                emit(&c.to_string());
            }
        }
    }
    Ok(())
}

/// Writes a line to stdout; a closed pipe (`possfuse ... | head`) is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}
