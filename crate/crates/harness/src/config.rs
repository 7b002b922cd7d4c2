use std::path::Path;

use possfuse::fusion::FusionMode;
use possfuse::metrics::OspaParams;
use possfuse::scenario::ScenarioConfig;
use serde::{Deserialize, Serialize};

use crate::{io_err, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Filter {
    Possibilistic,
    Probabilistic,
}

impl Filter {
    pub fn name(self) -> &'static str {
        match self {
            Filter::Possibilistic => "possibilistic",
            Filter::Probabilistic => "probabilistic",
        }
    }
}

pub fn mode_name(mode: FusionMode) -> &'static str {
    match mode {
        FusionMode::Centralised => "centralised",
        FusionMode::Decentralised => "decentralised",
        FusionMode::Sequential => "sequential",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub prune_possibilistic: f64,
    pub merge_hellinger: f64,
    pub prune_probabilistic: f64,
    pub merge_mahalanobis: f64,
    pub cap: usize,
    pub tau_tilde: f64,
    pub window: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            prune_possibilistic: 1e-4,
            merge_hellinger: 0.75,
            prune_probabilistic: 5e-4,
            merge_mahalanobis: 8.0,
            cap: 2000,
            tau_tilde: 0.1,
            window: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub filter: Filter,
    pub mode: FusionMode,
    pub runs: usize,
    pub gossip_rounds: usize,
    pub thresholds: Thresholds,
    pub birth_augment: bool,
    /// Test hook: skip every prune/merge/cap step.
    pub disable_maintenance: bool,
    pub ospa: OspaParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            filter: Filter::Possibilistic,
            mode: FusionMode::Centralised,
            runs: 100,
            gossip_rounds: 2,
            thresholds: Thresholds::default(),
            birth_augment: false,
            disable_maintenance: false,
            ospa: OspaParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: Self = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        OspaParams::new(self.ospa.cutoff, self.ospa.order)?;
        if self.runs == 0 {
            return Err(HarnessError::Config("runs must be positive".into()));
        }
        if self.mode == FusionMode::Decentralised && self.gossip_rounds == 0 {
            return Err(HarnessError::Config("decentralised mode needs gossip_rounds >= 1".into()));
        }
        let t = &self.thresholds;
        if !(t.tau_tilde > 0.0 && t.tau_tilde <= 1.0) || t.window == 0 || t.cap == 0 {
            return Err(HarnessError::Config("tau_tilde must lie in (0, 1]; window and cap must be positive".into()));
        }
        Ok(())
    }

    /// FNV-1a of the canonical JSON form.
    pub fn hash(&self) -> u64 {
        let bytes = serde_json::to_vec(self).unwrap_or_default();
        bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
            (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_defaults() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: ExperimentConfig = serde_json::from_str(r#"{"runs": 3, "mode": "decentralised"}"#).unwrap();
        assert_eq!(partial.runs, 3);
        assert_eq!(partial.scenario.scans, 30);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.runs = 0;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            mode: FusionMode::Decentralised,
            gossip_rounds: 0,
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.scenario.seed = 99;
        assert_ne!(a.hash(), b.hash());
    }
}
