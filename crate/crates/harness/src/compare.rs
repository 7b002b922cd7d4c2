//! Side-by-side comparison of two results files.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::experiment::{CSV_COLUMNS, SCHEMA};
use crate::{io_err, HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub header: String,
    pub runs: usize,
    pub rows: Vec<ResultsRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsRow {
    pub scan: usize,
    pub ospa_mean: f64,
    pub precision_mean: Option<f64>,
}

fn results_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("results.csv")
    } else {
        p.to_path_buf()
    }
}

/// Reads a `results.csv` (or the directory holding one), checking the
/// schema line and column header.
pub fn read_results(path: &Path) -> Result<ResultsTable> {
    let path = results_path(path);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let bad = |reason: String| HarnessError::Results {
        path: path.display().to_string(),
        reason,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?.to_string();
    if !header.starts_with('#') || !header.split_whitespace().any(|t| t == format!("schema={SCHEMA}")) {
        return Err(bad(format!("missing or unsupported schema line (expected schema={SCHEMA})")));
    }
    let runs = header
        .split_whitespace()
        .find_map(|t| t.strip_prefix("runs="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad("schema line lacks runs=".into()))?;
    let columns = lines.next().ok_or_else(|| bad("missing column header".into()))?;
    if columns != CSV_COLUMNS.join(",") {
        return Err(bad(format!("unexpected columns: {columns}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != CSV_COLUMNS.len() {
            return Err(bad(format!("row {} has {} fields", i + 1, f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("row {}: {e}", i + 1)));
        rows.push(ResultsRow {
            scan: f[0].parse().map_err(|e| bad(format!("row {}: {e}", i + 1)))?,
            ospa_mean: num(f[1])?,
            precision_mean: if f[3].is_empty() { None } else { Some(num(f[3])?) },
        });
    }
    Ok(ResultsTable { header, runs, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanDelta {
    pub scan: usize,
    /// `A − B`.
    pub ospa: f64,
    pub precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub per_scan: Vec<ScanDelta>,
    pub mean_ospa_delta: f64,
    pub mean_precision_delta: Option<f64>,
    /// Scans where A has the lower OSPA / higher precision.
    pub ospa_a_better: usize,
    pub precision_a_better: usize,
}

pub fn compare_tables(a: &ResultsTable, b: &ResultsTable) -> Result<Comparison> {
    if a.rows.len() != b.rows.len() || a.runs != b.runs {
        return Err(HarnessError::Config(format!(
            "results differ in shape: {} scans x {} runs vs {} scans x {} runs",
            a.rows.len(),
            a.runs,
            b.rows.len(),
            b.runs
        )));
    }
    let per_scan: Vec<ScanDelta> = a
        .rows
        .iter()
        .zip(&b.rows)
        .map(|(x, y)| ScanDelta {
            scan: x.scan,
            ospa: x.ospa_mean - y.ospa_mean,
            precision: x.precision_mean.zip(y.precision_mean).map(|(p, q)| p - q),
        })
        .collect();
    let n = per_scan.len().max(1) as f64;
    let pd: Vec<f64> = per_scan.iter().filter_map(|d| d.precision).collect();
    Ok(Comparison {
        mean_ospa_delta: per_scan.iter().map(|d| d.ospa).sum::<f64>() / n,
        mean_precision_delta: (!pd.is_empty()).then(|| pd.iter().sum::<f64>() / pd.len() as f64),
        ospa_a_better: per_scan.iter().filter(|d| d.ospa < 0.0).count(),
        precision_a_better: pd.iter().filter(|&&d| d > 0.0).count(),
        per_scan,
    })
}

pub fn compare(a: &Path, b: &Path) -> Result<Comparison> {
    compare_tables(&read_results(a)?, &read_results(b)?)
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>5} {:>14} {:>14}", "scan", "d_ospa(A-B)", "d_prec(A-B)")?;
        for d in &self.per_scan {
            let p = d.precision.map_or("-".to_string(), |v| format!("{v:.4}"));
            writeln!(f, "{:>5} {:>14.4} {:>14}", d.scan, d.ospa, p)?;
        }
        let p = self.mean_precision_delta.map_or("-".to_string(), |v| format!("{v:.4}"));
        writeln!(f, "mean  {:>14.4} {:>14}", self.mean_ospa_delta, p)?;
        write!(
            f,
            "A has lower OSPA in {}/{} scans and higher precision in {} scans",
            self.ospa_a_better,
            self.per_scan.len(),
            self.precision_a_better
        )
    }
}
