//! One Monte Carlo run of one pipeline.

use std::time::Instant;

use possfuse::fusion::{
    centralised_step, decentralised_step, metropolis_weights, sequential_step, FusionConfig, FusionMode,
    FusionSetup, GossipRound,
};
use possfuse::linalg::Vector;
use possfuse::metrics::{ospa, positions, precision_stat, OspaParams};
use possfuse::phd::{self, Intensity, PhdSetup};
use possfuse::scenario::{self, ScenarioRun, POSITION_INDICES};
use possfuse::tracker::{ExtractionConfig, MaintenanceConfig, Track};
use possfuse::MaxMixture;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Filter};
use crate::Result;

/// Extra OSPA cutoffs reported for sensitivity.
pub const OSPA_CUTOFFS: [f64; 3] = [50.0, 100.0, 200.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub scan: usize,
    /// OSPA at the configured cutoff, averaged over nodes.
    pub ospa: f64,
    /// OSPA at each of [`OSPA_CUTOFFS`].
    pub ospa_sensitivity: [f64; 3],
    /// Mean over nodes with at least one track; `None` when no node has one.
    pub precision: Option<f64>,
    pub tracks: f64,
    pub truth: usize,
    /// Component count, averaged over nodes.
    pub components: f64,
    pub gossip: Vec<GossipRound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_index: u64,
    pub seed: u64,
    pub config_hash: u64,
    pub scans: Vec<ScanResult>,
    /// Not part of any deterministic output.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl RunResult {
    pub fn mean_ospa(&self) -> f64 {
        self.scans.iter().map(|s| s.ospa).sum::<f64>() / self.scans.len() as f64
    }

    pub fn mean_ospa_at(&self, cutoff_index: usize) -> f64 {
        self.scans.iter().map(|s| s.ospa_sensitivity[cutoff_index]).sum::<f64>() / self.scans.len() as f64
    }

    /// Mean over scans where the statistic is defined.
    pub fn mean_precision(&self) -> Option<f64> {
        let vals: Vec<f64> = self.scans.iter().filter_map(|s| s.precision).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

enum State {
    Possibilistic(MaxMixture),
    PossibilisticNodes(Vec<MaxMixture>),
    Probabilistic(Intensity),
    ProbabilisticNodes(Vec<Intensity>),
}

struct StepResult {
    tracks: Vec<Vec<Track>>,
    components: f64,
    gossip: Vec<GossipRound>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Runs one Monte Carlo replicate.
pub fn run_single(cfg: &ExperimentConfig, run_index: u64) -> Result<RunResult> {
    let start = Instant::now();
    let sc = &cfg.scenario;
    let data = scenario::generate(sc, run_index)?;
    let (_, graph) = scenario::place_sensors(sc)?;
    let n = sc.n_sensors;
    let pi = if cfg.mode == FusionMode::Decentralised {
        metropolis_weights(&graph)?
    } else {
        possfuse::Matrix::identity(n, n)
    };
    let th = &cfg.thresholds;

    let poss = scenario::translate_parameters(sc)?;
    let setup = FusionSetup {
        motion: poss.motion.clone(),
        sensors: poss.sensors.clone(),
        clutter: poss.clutter,
        birth: poss.birth.clone(),
        augmentation: Some(poss.augmentation.clone()),
        maintenance: (!cfg.disable_maintenance).then_some(MaintenanceConfig {
            prune_threshold: th.prune_possibilistic,
            merge_threshold: th.merge_hellinger,
            cap: th.cap,
        }),
        extraction: ExtractionConfig {
            tau_tilde: th.tau_tilde,
            n_sensors: n,
            window: th.window,
        },
    };
    let mut fusion_cfg = FusionConfig::uniform(cfg.mode, n, cfg.gossip_rounds.max(1));
    fusion_cfg.birth_augment = cfg.birth_augment;

    let prob = scenario::translate_phd_parameters(sc)?;
    let phd_setup = PhdSetup {
        motion: prob.motion,
        sensors: prob.sensors,
        birth: prob.birth,
        params: phd::PhdParams {
            prune_threshold: th.prune_probabilistic,
            merge_threshold: th.merge_mahalanobis,
            cap: th.cap,
            tau_tilde: th.tau_tilde,
            window: th.window,
            ..prob.params
        },
        maintenance: !cfg.disable_maintenance,
    };

    let mut state = match (cfg.filter, cfg.mode) {
        (Filter::Possibilistic, FusionMode::Decentralised) => State::PossibilisticNodes(vec![MaxMixture::empty(4); n]),
        (Filter::Possibilistic, _) => State::Possibilistic(MaxMixture::empty(4)),
        (Filter::Probabilistic, FusionMode::Decentralised) => State::ProbabilisticNodes(vec![Intensity::empty(4); n]),
        (Filter::Probabilistic, _) => State::Probabilistic(Intensity::empty(4)),
    };

    let mut scans = Vec::with_capacity(sc.scans);
    for k in 1..=sc.scans {
        let ys = data.observations_at(k);
        let step = match &mut state {
            State::Possibilistic(f) => {
                let out = match cfg.mode {
                    FusionMode::Sequential => sequential_step(f, &ys, &setup)?,
                    _ => centralised_step(f, &ys, &setup, &fusion_cfg)?,
                };
                *f = out.posterior;
                StepResult {
                    tracks: vec![out.tracks],
                    components: f.len() as f64,
                    gossip: Vec::new(),
                }
            }
            State::PossibilisticNodes(nodes) => {
                let out = decentralised_step(nodes, &ys, &graph, &pi, &setup, &fusion_cfg)?;
                *nodes = out.nodes;
                StepResult {
                    tracks: out.tracks,
                    components: mean(nodes.iter().map(|f| f.len() as f64)),
                    gossip: out.rounds,
                }
            }
            State::Probabilistic(f) => {
                let out = match cfg.mode {
                    FusionMode::Sequential => phd::phd_sequential_step(f, &ys, &phd_setup)?,
                    _ => phd::phd_centralised_step(f, &ys, &phd_setup)?,
                };
                *f = out.posterior;
                StepResult {
                    tracks: vec![out.tracks],
                    components: f.len() as f64,
                    gossip: Vec::new(),
                }
            }
            State::ProbabilisticNodes(nodes) => {
                let out = phd::phd_decentralised_step(nodes, &ys, &graph, &pi, cfg.gossip_rounds, &phd_setup)?;
                *nodes = out.nodes;
                StepResult {
                    tracks: out.tracks,
                    components: mean(nodes.iter().map(|f| f.len() as f64)),
                    gossip: out.rounds,
                }
            }
        };
        scans.push(score(&data, k, step, &cfg.ospa)?);
    }
    Ok(RunResult {
        run_index,
        seed: sc.seed,
        config_hash: cfg.hash(),
        scans,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn score(data: &ScenarioRun, k: usize, step: StepResult, params: &OspaParams) -> Result<ScanResult> {
    let truth: Vec<Vector> = data
        .truth
        .states_at(k)
        .iter()
        .map(|x| Vector::from_iterator(2, POSITION_INDICES.iter().map(|&i| x[i])))
        .collect();
    let node_pos: Vec<Vec<Vector>> = step.tracks.iter().map(|t| positions(t, &POSITION_INDICES)).collect();
    let ospa_mean = |p: &OspaParams| mean(node_pos.iter().map(|est| ospa(est, &truth, p)));
    let mut sensitivity = [0.0; 3];
    for (s, &c) in sensitivity.iter_mut().zip(&OSPA_CUTOFFS) {
        *s = ospa_mean(&OspaParams {
            cutoff: c,
            order: params.order,
        });
    }
    let mut precisions = Vec::new();
    for t in &step.tracks {
        if let Some(p) = precision_stat(t)? {
            precisions.push(p);
        }
    }
    Ok(ScanResult {
        scan: k,
        ospa: ospa_mean(params),
        ospa_sensitivity: sensitivity,
        precision: (!precisions.is_empty()).then(|| mean(precisions.into_iter())),
        tracks: mean(step.tracks.iter().map(|t| t.len() as f64)),
        truth: truth.len(),
        components: step.components,
        gossip: step.gossip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(filter: Filter, mode: FusionMode) -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            filter,
            mode,
            runs: 1,
            ..ExperimentConfig::default()
        };
        cfg.scenario.scans = 5;
        cfg
    }

    #[test]
    fn every_pipeline_runs() {
        for filter in [Filter::Possibilistic, Filter::Probabilistic] {
            for mode in [FusionMode::Centralised, FusionMode::Decentralised, FusionMode::Sequential] {
                let r = run_single(&small(filter, mode), 0).unwrap();
                assert_eq!(r.scans.len(), 5);
                assert!(r.scans.iter().all(|s| s.ospa >= 0.0 && s.ospa <= 100.0));
            }
        }
    }

    #[test]
    fn deterministic() {
        let cfg = small(Filter::Possibilistic, FusionMode::Decentralised);
        let a = run_single(&cfg, 2).unwrap();
        let b = run_single(&cfg, 2).unwrap();
        assert_eq!(a.scans, b.scans);
    }
}
