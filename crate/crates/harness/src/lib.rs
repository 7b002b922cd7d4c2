//! Monte Carlo experiments comparing possibilistic and probabilistic
//! multi-sensor tracking pipelines.

pub mod compare;
pub mod config;
pub mod experiment;
pub mod pipeline;

pub use compare::{compare, Comparison};
pub use config::{ExperimentConfig, Filter, Thresholds};
pub use experiment::{run_all, run_experiment, ExperimentSummary, SCHEMA};
pub use pipeline::{run_single, RunResult, ScanResult};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] possfuse::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed results file {path}: {reason}")]
    Results { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}
