//! Simulation scenario: nearly-constant-velocity targets observed in
//! position by sensors on the boundary of a square region, plus the
//! translation of its probabilistic parameters into possibilistic ones.
//!
//! State layout is `(x, ẋ, y, ẏ)`. Scans are numbered from 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::NetworkGraph;
use crate::gaussian::{GaussianComponent, ObsTag};
use crate::linalg::{self, Matrix, Vector};
use crate::mixture::MaxMixture;
use crate::phd::{Intensity, PhdParams};
use crate::tracker::{
    BirthModel, ClutterModel, ExtractionConfig, FieldOfView, MaintenanceConfig, MotionModel, Observation,
    ObservationModel,
};

/// Coordinates of the position in the state vector.
pub const POSITION_INDICES: [usize; 2] = [0, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BirthEvent {
    pub scan: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphSpec {
    Ring,
    Complete,
    Edges(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scans: usize,
    pub dt: f64,
    /// Process noise standard deviation.
    pub sigma: f64,
    /// Observation noise standard deviation.
    pub sigma_obs: f64,
    /// Standard deviation of the velocity of new targets.
    pub sigma_v: f64,
    pub region_lower: [f64; 2],
    pub region_upper: [f64; 2],
    pub p_d: f64,
    pub p_s: f64,
    pub lambda_b: f64,
    pub lambda_fa: f64,
    pub n_sensors: usize,
    /// Explicit sensor positions; otherwise corners (n = 4) or corners and
    /// edge midpoints (n = 8) of the region.
    pub sensor_positions: Option<Vec<[f64; 2]>>,
    pub graph: GraphSpec,
    pub births: Vec<BirthEvent>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scans: 30,
            dt: 1.0,
            sigma: 0.5,
            sigma_obs: 5.0,
            sigma_v: 5.0,
            region_lower: [0.0, 0.0],
            region_upper: [1000.0, 1000.0],
            p_d: 0.7,
            p_s: 1.0 - 1e-3,
            lambda_b: 0.1,
            lambda_fa: 10.0,
            n_sensors: 4,
            sensor_positions: None,
            graph: GraphSpec::Ring,
            births: vec![
                BirthEvent { scan: 1, count: 3 },
                BirthEvent { scan: 10, count: 1 },
                BirthEvent { scan: 20, count: 2 },
            ],
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.dt, self.sigma, self.sigma_obs, self.sigma_v, self.lambda_b];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("dt, sigma, sigma_obs, sigma_v and lambda_b must be positive"));
        }
        if !(self.lambda_fa >= 0.0) {
            return Err(Error::invalid("lambda_fa must be non-negative"));
        }
        if !(self.p_d > 0.0 && self.p_d < 1.0) || !(self.p_s > 0.0 && self.p_s <= 1.0) {
            return Err(Error::invalid("p_d must lie in (0, 1) and p_s in (0, 1]"));
        }
        if self.scans == 0 || self.n_sensors == 0 {
            return Err(Error::invalid("scans and n_sensors must be positive"));
        }
        if (0..2).any(|i| !(self.region_lower[i] < self.region_upper[i])) {
            return Err(Error::invalid("region is degenerate"));
        }
        // Events past the horizon are never reached and are ignored.
        if self.births.iter().any(|b| b.scan == 0) {
            return Err(Error::invalid("birth scans start at 1"));
        }
        Ok(())
    }

    pub fn region(&self) -> FieldOfView {
        FieldOfView {
            lower: self.region_lower.to_vec(),
            upper: self.region_upper.to_vec(),
        }
    }

    pub fn volume(&self) -> f64 {
        self.region().volume()
    }

    /// `c = 2πσ′² / V`.
    pub fn scale_constant(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.sigma_obs * self.sigma_obs / self.volume()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrices {
    pub g: Matrix,
    pub q: Matrix,
    pub h: Matrix,
    pub r: Matrix,
}

/// `G = I₂ ⊗ [[1, Δ], [0, 1]]`, `Q = σ² I₂ ⊗ [[Δ⁴/4, Δ³/2], [Δ³/2, Δ²]]`,
/// `H` selecting the positions and `R = σ′² I₂`.
pub fn build_matrices(cfg: &ScenarioConfig) -> Matrices {
    let dt = cfg.dt;
    let gb = Matrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]);
    let qb = Matrix::from_row_slice(2, 2, &[dt.powi(4) / 4.0, dt.powi(3) / 2.0, dt.powi(3) / 2.0, dt * dt])
        * (cfg.sigma * cfg.sigma);
    let i2 = Matrix::identity(2, 2);
    let mut h = Matrix::zeros(2, 4);
    h[(0, 0)] = 1.0;
    h[(1, 2)] = 1.0;
    Matrices {
        g: i2.kronecker(&gb),
        q: i2.kronecker(&qb),
        h,
        r: Matrix::identity(2, 2) * (cfg.sigma_obs * cfg.sigma_obs),
    }
}

/// Sensor state-space offsets `x_s = (p_x, 0, p_y, 0)` and the graph.
pub fn place_sensors(cfg: &ScenarioConfig) -> Result<(Vec<Vector>, NetworkGraph)> {
    let [x0, y0] = cfg.region_lower;
    let [x1, y1] = cfg.region_upper;
    let (xm, ym) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let positions: Vec<[f64; 2]> = match (&cfg.sensor_positions, cfg.n_sensors) {
        (Some(p), n) if p.len() == n => p.clone(),
        (Some(p), n) => {
            return Err(Error::invalid(format!("{} sensor positions for {n} sensors", p.len())));
        }
        (None, 4) => vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
        (None, 8) => vec![
            [x0, y0],
            [xm, y0],
            [x1, y0],
            [x1, ym],
            [x1, y1],
            [xm, y1],
            [x0, y1],
            [x0, ym],
        ],
        (None, n) => {
            return Err(Error::invalid(format!(
                "no preset sensor layout for n = {n}; give sensor_positions"
            )));
        }
    };
    let graph = match &cfg.graph {
        GraphSpec::Ring => NetworkGraph::ring(cfg.n_sensors)?,
        GraphSpec::Complete => NetworkGraph::complete(cfg.n_sensors)?,
        GraphSpec::Edges(e) => NetworkGraph::new(cfg.n_sensors, e.iter().copied())?,
    };
    let offsets = positions
        .iter()
        .map(|p| Vector::from_row_slice(&[p[0], 0.0, p[1], 0.0]))
        .collect();
    Ok((offsets, graph))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetTruth {
    pub birth_scan: usize,
    /// First scan at which the target is gone, if it dies within the run.
    pub death_scan: Option<usize>,
    /// One state per scan alive, starting at `birth_scan`.
    pub states: Vec<Vector>,
    /// `noises[k]` drove `states[k + 1] = G states[k] + noises[k]`.
    pub noises: Vec<Vector>,
}

impl TargetTruth {
    pub fn state_at(&self, scan: usize) -> Option<&Vector> {
        scan.checked_sub(self.birth_scan).and_then(|i| self.states.get(i))
    }

    /// Replays the recursion from the birth state and stored noises.
    pub fn resimulate(&self, g: &Matrix) -> Vec<Vector> {
        let mut out = vec![self.states[0].clone()];
        for u in &self.noises {
            let next = g * out.last().expect("non-empty") + u;
            out.push(next);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub targets: Vec<TargetTruth>,
}

impl GroundTruth {
    pub fn states_at(&self, scan: usize) -> Vec<Vector> {
        self.targets.iter().filter_map(|t| t.state_at(scan).cloned()).collect()
    }
}

/// One sensor's data for one scan, in sensor-local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorScan {
    pub observations: Vec<Observation>,
    /// Index of the originating target, `None` for false alarms.
    pub origins: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub run_index: u64,
    pub truth: GroundTruth,
    /// `frames[sensor][scan − 1]`.
    pub frames: Vec<Vec<SensorScan>>,
    pub sensor_offsets: Vec<Vector>,
}

impl ScenarioRun {
    /// Observation sets of every sensor at `scan`.
    pub fn observations_at(&self, scan: usize) -> Vec<Vec<Observation>> {
        self.frames.iter().map(|f| f[scan - 1].observations.clone()).collect()
    }
}

pub const STREAM_TRUTH: u64 = 0;

/// Stream id of a purpose within a run: `(run_index << 8) | purpose`, with
/// purpose 0 for the truth and `1 + i` for sensor `i`.
pub fn stream_id(run_index: u64, purpose: u64) -> u64 {
    (run_index << 8) | purpose
}

pub fn rng_for(seed: u64, run_index: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(run_index, purpose));
    rng
}

fn std_normal(rng: &mut ChaCha8Rng, d: usize) -> Vector {
    Vector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

fn uniform_in(rng: &mut ChaCha8Rng, lower: &[f64; 2], upper: &[f64; 2]) -> [f64; 2] {
    [rng.random_range(lower[0]..upper[0]), rng.random_range(lower[1]..upper[1])]
}

/// Generates truth and sensor data for Monte Carlo run `run_index`.
pub fn generate(cfg: &ScenarioConfig, run_index: u64) -> Result<ScenarioRun> {
    cfg.validate()?;
    if cfg.n_sensors > 255 {
        return Err(Error::invalid("at most 255 sensors fit in the stream layout"));
    }
    let m = build_matrices(cfg);
    let noise_sqrt = linalg::psd_sqrt(&m.q);
    let (offsets, _) = place_sensors(cfg)?;

    let mut rng = rng_for(cfg.seed, run_index, STREAM_TRUTH);
    let mut targets: Vec<TargetTruth> = Vec::new();
    for k in 1..=cfg.scans {
        for t in targets.iter_mut().filter(|t| t.death_scan.is_none()) {
            if rng.random::<f64>() >= cfg.p_s {
                t.death_scan = Some(k);
                continue;
            }
            let u = &noise_sqrt * std_normal(&mut rng, 4);
            let next = &m.g * t.states.last().expect("non-empty") + &u;
            t.noises.push(u);
            t.states.push(next);
        }
        let count: usize = cfg.births.iter().filter(|b| b.scan == k).map(|b| b.count).sum();
        for _ in 0..count {
            let p = uniform_in(&mut rng, &cfg.region_lower, &cfg.region_upper);
            let v = std_normal(&mut rng, 2) * cfg.sigma_v;
            targets.push(TargetTruth {
                birth_scan: k,
                death_scan: None,
                states: vec![Vector::from_row_slice(&[p[0], v[0], p[1], v[1]])],
                noises: Vec::new(),
            });
        }
    }
    let truth = GroundTruth { targets };

    let clutter = if cfg.lambda_fa > 0.0 {
        Some(Poisson::new(cfg.lambda_fa).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };
    let mut frames = Vec::with_capacity(cfg.n_sensors);
    for (s, offset) in offsets.iter().enumerate() {
        let mut rng = rng_for(cfg.seed, run_index, 1 + s as u64);
        let hs = &m.h * offset;
        let mut scans = Vec::with_capacity(cfg.scans);
        for k in 1..=cfg.scans {
            let mut values = Vec::new();
            let mut origins = Vec::new();
            for (ti, t) in truth.targets.iter().enumerate() {
                let Some(x) = t.state_at(k) else { continue };
                if rng.random::<f64>() >= cfg.p_d {
                    continue;
                }
                values.push(&m.h * (x - offset) + std_normal(&mut rng, 2) * cfg.sigma_obs);
                origins.push(Some(ti));
            }
            let n_fa = clutter.as_ref().map_or(0, |p| p.sample(&mut rng) as usize);
            for _ in 0..n_fa {
                let y = uniform_in(&mut rng, &cfg.region_lower, &cfg.region_upper);
                values.push(Vector::from_row_slice(&y) - &hs);
                origins.push(None);
            }
            let observations = values
                .into_iter()
                .enumerate()
                .map(|(i, value)| Observation {
                    tag: ObsTag::new(s as u32, k as u32, i as u32),
                    value,
                })
                .collect();
            scans.push(SensorScan { observations, origins });
        }
        frames.push(scans);
    }
    Ok(ScenarioRun {
        run_index,
        truth,
        frames,
        sensor_offsets: offsets,
    })
}

/// Possibilistic models derived from the scenario.
#[derive(Debug, Clone)]
pub struct PossibilisticModels {
    pub motion: MotionModel,
    pub sensors: Vec<ObservationModel>,
    pub birth: BirthModel,
    pub clutter: ClutterModel,
    /// Component realising `α_b α_df` over the region.
    pub augmentation: MaxMixture,
    pub scale_constant: f64,
}

/// Shape of the birth term: centred on the region with position variance
/// such that the possibility is at least 1/2 over the whole region, and
/// velocity variance `σ_v²`.
pub fn birth_shape(cfg: &ScenarioConfig) -> (Vector, Matrix) {
    let c = cfg.region().centre();
    let half_diag2: f64 = (0..2)
        .map(|i| (0.5 * (cfg.region_upper[i] - cfg.region_lower[i])).powi(2))
        .sum();
    // N̄ at a corner is exp(−½ half_diag2 / s) = 1/2 when every axis has variance s
    let s = half_diag2 / (2.0 * std::f64::consts::LN_2);
    let v2 = cfg.sigma_v * cfg.sigma_v;
    (
        Vector::from_row_slice(&[c[0], 0.0, c[1], 0.0]),
        Matrix::from_diagonal(&Vector::from_row_slice(&[s, v2, s, v2])),
    )
}

/// `c = 2πσ′²/V`, `α_b = min(1, cλ_b)`, `F_fa = min(1, cλ_fa)` and
/// `α_df = 1 − p_d` on the region.
pub fn translate_parameters(cfg: &ScenarioConfig) -> Result<PossibilisticModels> {
    cfg.validate()?;
    let m = build_matrices(cfg);
    let (offsets, _) = place_sensors(cfg)?;
    let c = cfg.scale_constant();
    let alpha_b = (c * cfg.lambda_b).min(1.0);
    let f_fa = (c * cfg.lambda_fa).min(1.0);
    let alpha_df = 1.0 - cfg.p_d;
    let sensors = offsets
        .into_iter()
        .map(|x_s| ObservationModel::new(m.h.clone(), m.r.clone(), alpha_df, cfg.region(), x_s))
        .collect::<Result<Vec<_>>>()?;
    let (mean, cov) = birth_shape(cfg);
    let birth_comp = GaussianComponent::new(alpha_b, mean.clone(), cov.clone())?;
    let birth = BirthModel::new(MaxMixture::new(4, vec![birth_comp])?, alpha_b)?;
    let augmentation = MaxMixture::new(4, vec![GaussianComponent::new(alpha_b * alpha_df, mean, cov)?])?;
    Ok(PossibilisticModels {
        motion: MotionModel::new(m.g, m.q)?,
        sensors,
        birth,
        clutter: ClutterModel::new(f_fa.max(f64::MIN_POSITIVE))?,
        augmentation,
        scale_constant: c,
    })
}

#[derive(Debug, Clone)]
pub struct ProbabilisticModels {
    pub motion: MotionModel,
    pub sensors: Vec<ObservationModel>,
    pub birth: Intensity,
    pub params: PhdParams,
}

/// GM-PHD counterpart: birth intensity of mass `λ_b` with the same shape,
/// clutter intensity `λ_fa / V`.
pub fn translate_phd_parameters(cfg: &ScenarioConfig) -> Result<ProbabilisticModels> {
    let poss = translate_parameters(cfg)?;
    let (mean, cov) = birth_shape(cfg);
    Ok(ProbabilisticModels {
        motion: poss.motion,
        sensors: poss.sensors,
        birth: Intensity::new(4, vec![GaussianComponent::intensity(cfg.lambda_b, mean, cov)?])?,
        params: PhdParams {
            p_d: cfg.p_d,
            p_s: cfg.p_s,
            clutter_intensity: cfg.lambda_fa / cfg.volume(),
            ..PhdParams::default()
        },
    })
}

/// Maintenance and extraction defaults of the possibilistic pipeline.
pub fn possibilistic_defaults(n_sensors: usize) -> (MaintenanceConfig, ExtractionConfig) {
    (
        MaintenanceConfig::default(),
        ExtractionConfig {
            tau_tilde: 0.1,
            n_sensors,
            window: 10,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub birth_scan: usize,
    pub death_scan: Option<usize>,
    pub states: Vec<Vec<f64>>,
    pub noises: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub observations: Vec<Vec<f64>>,
    pub origins: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamRecord {
    pub truth: u64,
    pub sensors: Vec<u64>,
}

/// JSON dump of a generated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDump {
    pub config: ScenarioConfig,
    pub run_index: u64,
    pub master_seed: u64,
    pub streams: StreamRecord,
    pub sensor_offsets: Vec<Vec<f64>>,
    pub truth: Vec<TargetRecord>,
    /// `frames[sensor][scan − 1]`.
    pub frames: Vec<Vec<ScanRecord>>,
}

fn to_vec(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

impl ScenarioDump {
    pub fn new(cfg: &ScenarioConfig, run: &ScenarioRun) -> Self {
        Self {
            config: cfg.clone(),
            run_index: run.run_index,
            master_seed: cfg.seed,
            streams: StreamRecord {
                truth: stream_id(run.run_index, STREAM_TRUTH),
                sensors: (0..run.frames.len()).map(|i| stream_id(run.run_index, 1 + i as u64)).collect(),
            },
            sensor_offsets: run.sensor_offsets.iter().map(to_vec).collect(),
            truth: run
                .truth
                .targets
                .iter()
                .map(|t| TargetRecord {
                    birth_scan: t.birth_scan,
                    death_scan: t.death_scan,
                    states: t.states.iter().map(to_vec).collect(),
                    noises: t.noises.iter().map(to_vec).collect(),
                })
                .collect(),
            frames: run
                .frames
                .iter()
                .map(|f| {
                    f.iter()
                        .map(|s| ScanRecord {
                            observations: s.observations.iter().map(|o| to_vec(&o.value)).collect(),
                            origins: s.origins.clone(),
                        })
                        .collect()
                })
                .collect(),
        }
    }
}
