//! Monte Carlo loop, aggregation and result files.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{mode_name, ExperimentConfig};
use crate::pipeline::{run_single, RunResult, OSPA_CUTOFFS};
use crate::{io_err, Result};

/// Identifier written in the first line of every results CSV.
pub const SCHEMA: &str = "possfuse-results/v1";

pub const CSV_COLUMNS: [&str; 11] = [
    "scan",
    "ospa_mean",
    "ospa_std",
    "precision_mean",
    "precision_std",
    "precision_count",
    "tracks_mean",
    "tracks_std",
    "truth_mean",
    "components_mean",
    "components_std",
];

/// Runs every replicate. Results come back in run order whatever the
/// scheduling.
pub fn run_all(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    (0..cfg.runs as u64).into_par_iter().map(|i| run_single(cfg, i)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }

    /// Population standard deviation.
    fn std(&self) -> Option<f64> {
        let m = self.mean()?;
        Some((self.sum_sq / self.n as f64 - m * m).max(0.0).sqrt())
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.9e}")).unwrap_or_default()
}

/// Per-scan aggregate CSV, preceded by a schema comment line.
pub fn results_csv(cfg: &ExperimentConfig, runs: &[RunResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# schema={SCHEMA} filter={} mode={} sensors={} runs={} scans={} seed={} ospa_c={} ospa_p={}",
        cfg.filter.name(),
        mode_name(cfg.mode),
        cfg.scenario.n_sensors,
        runs.len(),
        cfg.scenario.scans,
        cfg.scenario.seed,
        cfg.ospa.cutoff,
        cfg.ospa.order
    );
    let _ = writeln!(out, "{}", CSV_COLUMNS.join(","));
    for k in 0..cfg.scenario.scans {
        let [mut o, mut p, mut t, mut tr, mut c] = [Moments::default(); 5];
        for r in runs {
            let s = &r.scans[k];
            o.push(s.ospa);
            if let Some(v) = s.precision {
                p.push(v);
            }
            t.push(s.tracks);
            tr.push(s.truth as f64);
            c.push(s.components);
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            k + 1,
            fmt_opt(o.mean()),
            fmt_opt(o.std()),
            fmt_opt(p.mean()),
            fmt_opt(p.std()),
            p.n,
            fmt_opt(t.mean()),
            fmt_opt(t.std()),
            fmt_opt(tr.mean()),
            fmt_opt(c.mean()),
            fmt_opt(c.std()),
        );
    }
    out
}

/// Per-scan trace of one run, including gossip instrumentation.
pub fn trace_csv(run: &RunResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# schema={SCHEMA}-trace run={} config_hash={:016x}", run.run_index, run.config_hash);
    let _ = writeln!(out, "scan,ospa,precision,tracks,truth,components,round,round_components,round_bytes");
    for s in &run.scans {
        let base = format!(
            "{},{:.9e},{},{},{},{}",
            s.scan,
            s.ospa,
            fmt_opt(s.precision),
            s.tracks,
            s.truth,
            s.components
        );
        if s.gossip.is_empty() {
            let _ = writeln!(out, "{base},,,");
        }
        for (l, g) in s.gossip.iter().enumerate() {
            let total: usize = g.components.iter().sum();
            let _ = writeln!(out, "{base},{},{},{}", l + 1, total, g.message_bytes);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSummary {
    pub cutoff: f64,
    pub ospa_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema: String,
    pub filter: String,
    pub mode: String,
    pub sensors: usize,
    pub runs: usize,
    pub config_hash: String,
    pub ospa_mean: f64,
    pub precision_mean: Option<f64>,
    pub ospa_by_cutoff: Vec<CutoffSummary>,
}

pub fn summarise(cfg: &ExperimentConfig, runs: &[RunResult]) -> ExperimentSummary {
    let n = runs.len() as f64;
    let precisions: Vec<f64> = runs.iter().filter_map(RunResult::mean_precision).collect();
    ExperimentSummary {
        schema: SCHEMA.to_string(),
        filter: cfg.filter.name().to_string(),
        mode: mode_name(cfg.mode).to_string(),
        sensors: cfg.scenario.n_sensors,
        runs: runs.len(),
        config_hash: format!("{:016x}", cfg.hash()),
        ospa_mean: runs.iter().map(RunResult::mean_ospa).sum::<f64>() / n,
        precision_mean: (!precisions.is_empty()).then(|| precisions.iter().sum::<f64>() / precisions.len() as f64),
        ospa_by_cutoff: OSPA_CUTOFFS
            .iter()
            .enumerate()
            .map(|(i, &c)| CutoffSummary {
                cutoff: c,
                ospa_mean: runs.iter().map(|r| r.mean_ospa_at(i)).sum::<f64>() / n,
            })
            .collect(),
    }
}

/// Runs the experiment and writes `results.csv`, `config.json`,
/// `summary.json` and, with `trace`, one `traces/run_NNNN.csv` per run.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, trace: bool) -> Result<ExperimentSummary> {
    let runs = run_all(cfg)?;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let write = |name: &str, body: &str| {
        let p = out_dir.join(name);
        std::fs::write(&p, body).map_err(io_err(&p))
    };
    write("results.csv", &results_csv(cfg, &runs))?;
    write("config.json", &serde_json::to_string_pretty(cfg)?)?;
    let summary = summarise(cfg, &runs);
    write("summary.json", &serde_json::to_string_pretty(&summary)?)?;
    if trace {
        let dir = out_dir.join("traces");
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for r in &runs {
            let p = dir.join(format!("run_{:04}.csv", r.run_index));
            std::fs::write(&p, trace_csv(r)).map_err(io_err(&p))?;
        }
    }
    Ok(summary)
}
