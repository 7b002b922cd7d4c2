//! Multi-sensor fusion of presence functions.
//!
//! Centralised fusion splits the predicted presence function into powers
//! `F^{w_i}`, updates each piece with one sensor and multiplies the
//! results. Decentralised fusion runs the same recursion at each node on a
//! `1/n` share of the information (prediction with `Q/w_i`), then averages
//! in the log domain with Metropolis-weighted gossip.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianComponent;
use crate::linalg::{self, Matrix, Vector};
use crate::mixture::{fuse_product_above, MaxMixture};
use crate::tracker::{
    self, BirthModel, ClutterModel, ExtractionConfig, MaintenanceConfig, MotionModel, Observation, ObservationModel,
    Track,
};

/// Undirected sensor graph. Neighbour sets include the node itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    neighbours: Vec<BTreeSet<usize>>,
}

impl NetworkGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        let mut set = BTreeSet::new();
        let mut neighbours: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a}, {b}) references a missing node")));
            }
            if a == b {
                return Err(Error::invalid(format!("self loop at node {a}")));
            }
            set.insert((a.min(b), a.max(b)));
            neighbours[a].insert(b);
            neighbours[b].insert(a);
        }
        Ok(Self {
            n,
            edges: set,
            neighbours,
        })
    }

    /// Cycle `0 − 1 − … − (n−1) − 0`.
    pub fn ring(n: usize) -> Result<Self> {
        match n {
            0 => Err(Error::invalid("graph needs at least one node")),
            1 => Self::new(1, []),
            2 => Self::new(2, [(0, 1)]),
            _ => Self::new(n, (0..n).map(|i| (i, (i + 1) % n))),
        }
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn neighbours(&self, i: usize) -> &BTreeSet<usize> {
        &self.neighbours[i]
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &self.neighbours[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// `π_ij = 1 / max(#N_i, #N_j)` for neighbours, `π_ii = 1 − Σ_{j≠i} π_ij`.
pub fn metropolis_weights(g: &NetworkGraph) -> Result<Matrix> {
    if !g.is_connected() {
        return Err(Error::invalid("Metropolis weights need a connected graph"));
    }
    let n = g.n();
    let mut pi = Matrix::zeros(n, n);
    for &(i, j) in g.edges() {
        let v = 1.0 / g.neighbours(i).len().max(g.neighbours(j).len()) as f64;
        pi[(i, j)] = v;
        pi[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| pi[(i, j)]).sum();
        pi[(i, i)] = 1.0 - off;
    }
    Ok(pi)
}

pub fn matrix_power(m: &Matrix, l: usize) -> Matrix {
    let mut out = Matrix::identity(m.nrows(), m.ncols());
    for _ in 0..l {
        out = &out * m;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    Centralised,
    Decentralised,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub mode: FusionMode,
    pub split_weights: Vec<f64>,
    pub gossip_rounds: usize,
    pub birth_augment: bool,
}

impl FusionConfig {
    pub fn uniform(mode: FusionMode, n: usize, gossip_rounds: usize) -> Self {
        Self {
            mode,
            split_weights: vec![1.0 / n as f64; n],
            gossip_rounds,
            birth_augment: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.split_weights.len() != n {
            return Err(Error::invalid(format!(
                "{} split weights for {n} sensors",
                self.split_weights.len()
            )));
        }
        if self.split_weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
            return Err(Error::invalid("split weights must lie in (0, 1]"));
        }
        let total: f64 = self.split_weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split weights sum to {total}, not 1")));
        }
        if self.mode == FusionMode::Decentralised && self.gossip_rounds == 0 {
            return Err(Error::invalid("decentralised fusion needs at least one gossip round"));
        }
        Ok(())
    }
}

/// Everything a fusion step needs besides the state and the data.
#[derive(Debug, Clone)]
pub struct FusionSetup {
    pub motion: MotionModel,
    pub sensors: Vec<ObservationModel>,
    pub clutter: ClutterModel,
    pub birth: BirthModel,
    /// Component realising `α_b α_df` over the observable region, added to
    /// node posteriors when `birth_augment` is set.
    pub augmentation: Option<MaxMixture>,
    /// `None` disables every prune/merge/cap step.
    pub maintenance: Option<MaintenanceConfig>,
    pub extraction: ExtractionConfig,
}

impl FusionSetup {
    pub fn n_sensors(&self) -> usize {
        self.sensors.len()
    }

    fn alpha_df(&self) -> f64 {
        self.sensors.first().map_or(1.0, ObservationModel::alpha_df)
    }

    fn maintain(&self, f: MaxMixture) -> Result<MaxMixture> {
        match &self.maintenance {
            Some(cfg) => tracker::maintain_with(&f, cfg),
            None => Ok(f),
        }
    }

    /// Forgets tags that have left the extraction window of the scan the
    /// observations belong to.
    fn expire_tags(&self, f: &mut MaxMixture, observations: &[Vec<Observation>]) {
        if let Some(scan) = observations.iter().flatten().map(|o| o.tag.scan).max() {
            f.forget_tags_before((scan + 1).saturating_sub(self.extraction.window));
        }
    }

    /// State coordinates some sensor measures directly.
    fn observed_coordinates(&self) -> Vec<usize> {
        let dim = self.birth.mixture().dim();
        (0..dim)
            .filter(|&j| self.sensors.iter().any(|s| s.matrix().column(j).iter().any(|&h| h != 0.0)))
            .collect()
    }

    fn log_floor(&self) -> f64 {
        match &self.maintenance {
            Some(cfg) if cfg.prune_threshold > 0.0 => cfg.prune_threshold.ln(),
            _ => f64::NEG_INFINITY,
        }
    }

    fn check(&self, observations: &[Vec<Observation>]) -> Result<()> {
        if observations.len() != self.sensors.len() {
            return Err(Error::invalid(format!(
                "{} observation sets for {} sensors",
                observations.len(),
                self.sensors.len()
            )));
        }
        if self.sensors.is_empty() {
            return Err(Error::invalid("no sensors"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub posterior: MaxMixture,
    pub tracks: Vec<Track>,
}

/// Product of a sequence of mixtures, reduced after every factor when
/// maintenance is enabled. Pruning inside the fold is exact with respect to
/// a final prune at the same threshold since product weights only decrease.
fn fold_product(setup: &FusionSetup, factors: Vec<MaxMixture>) -> Result<MaxMixture> {
    let floor = setup.log_floor();
    let mut iter = factors.into_iter();
    let mut acc = iter.next().ok_or_else(|| Error::invalid("nothing to fuse"))?;
    for f in iter {
        acc = setup.maintain(fuse_product_above(&acc, &f, floor)?)?;
    }
    Ok(acc)
}

pub fn centralised_step(
    central: &MaxMixture,
    observations: &[Vec<Observation>],
    setup: &FusionSetup,
    cfg: &FusionConfig,
) -> Result<StepOutput> {
    setup.check(observations)?;
    cfg.validate(setup.n_sensors())?;
    let predicted = tracker::predict(central, &setup.motion, &setup.birth, 1.0)?;
    let mut posteriors = Vec::with_capacity(setup.n_sensors());
    for ((sensor, ys), &w) in setup.sensors.iter().zip(observations).zip(&cfg.split_weights) {
        let mut post = tracker::update(&predicted.power(w)?, ys, sensor, &setup.clutter)?;
        if cfg.birth_augment {
            let aug = setup
                .augmentation
                .as_ref()
                .ok_or_else(|| Error::invalid("birth augmentation requested but not configured"))?;
            post.extend(aug.components().iter().cloned());
        }
        posteriors.push(post);
    }
    let fused = fold_product(setup, posteriors)?;
    let mut posterior = setup.maintain(fused)?;
    setup.expire_tags(&mut posterior, observations);
    let tracks = tracker::extract_tracks(&posterior, &setup.extraction, setup.alpha_df());
    Ok(StepOutput { posterior, tracks })
}

/// Folds the single-sensor update over the sensors in index order.
pub fn sequential_multisensor_update(
    f: &MaxMixture,
    observations: &[Vec<Observation>],
    sensors: &[ObservationModel],
    clutter: &ClutterModel,
) -> Result<MaxMixture> {
    if observations.len() != sensors.len() {
        return Err(Error::invalid("one observation set per sensor is required"));
    }
    let mut acc = f.clone();
    for (sensor, ys) in sensors.iter().zip(observations) {
        acc = tracker::update(&acc, ys, sensor, clutter)?;
    }
    Ok(acc)
}

/// Prediction then a sequential multi-sensor update, with maintenance after
/// each sensor when enabled.
pub fn sequential_step(
    f: &MaxMixture,
    observations: &[Vec<Observation>],
    setup: &FusionSetup,
) -> Result<StepOutput> {
    setup.check(observations)?;
    let mut acc = tracker::predict(f, &setup.motion, &setup.birth, 1.0)?;
    for (sensor, ys) in setup.sensors.iter().zip(observations) {
        acc = setup.maintain(tracker::update(&acc, ys, sensor, &setup.clutter)?)?;
    }
    setup.expire_tags(&mut acc, observations);
    let tracks = tracker::extract_tracks(&acc, &setup.extraction, setup.alpha_df());
    Ok(StepOutput {
        posterior: acc,
        tracks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GossipRound {
    /// Component count per node after the round.
    pub components: Vec<usize>,
    /// Total encoded size of the mixtures broadcast in the round.
    pub message_bytes: usize,
}

#[derive(Debug, Clone)]
pub struct DecentralisedOutput {
    pub nodes: Vec<MaxMixture>,
    pub tracks: Vec<Vec<Track>>,
    pub rounds: Vec<GossipRound>,
}

fn message_bytes(f: &MaxMixture) -> usize {
    crate::mixture::wire_bytes(f.components())
}

/// Fuses `∏_j F_j^{e_j}` over the entries with positive exponent.
fn weighted_product(setup: &FusionSetup, nodes: &[MaxMixture], exponents: impl Iterator<Item = (usize, f64)>) -> Result<MaxMixture> {
    let factors = exponents
        .filter(|&(_, e)| e > 0.0)
        .map(|(j, e)| nodes[j].raise(e))
        .collect::<Result<Vec<_>>>()?;
    fold_product(setup, factors)
}

/// One scan of decentralised fusion.
///
/// Each node predicts with transition power `w_i` and a birth term
/// discounted on the unobserved coordinates,
/// updates with its own sensor, then takes part in `L` gossip rounds
/// `F^{(i,l)} = ∏_{j ∈ N_i} [F^{(j,l−1)}]^{π_ij}`. With maintenance
/// disabled the `L` rounds are applied at once through the rows of `Π^L`,
/// which is pointwise identical and avoids the repeated cross products.
/// Tracks are read from `[F^{(i)}]^n`.
pub fn decentralised_step(
    nodes: &[MaxMixture],
    observations: &[Vec<Observation>],
    graph: &NetworkGraph,
    pi: &Matrix,
    setup: &FusionSetup,
    cfg: &FusionConfig,
) -> Result<DecentralisedOutput> {
    setup.check(observations)?;
    let n = setup.n_sensors();
    cfg.validate(n)?;
    if nodes.len() != n || graph.n() != n || pi.shape() != (n, n) {
        return Err(Error::invalid("node states, graph, weights and sensors disagree on n"));
    }

    let observed = setup.observed_coordinates();
    let mut local = Vec::with_capacity(n);
    for i in 0..n {
        let w = cfg.split_weights[i];
        let birth = birth_discount(&setup.birth, &observed, w)?;
        let predicted = tracker::predict(&nodes[i], &setup.motion, &birth, w)?;
        let mut post = tracker::update(&predicted, &observations[i], &setup.sensors[i], &setup.clutter)?;
        if cfg.birth_augment {
            let aug = setup
                .augmentation
                .as_ref()
                .ok_or_else(|| Error::invalid("birth augmentation requested but not configured"))?;
            post.extend(aug.power(w)?.components().iter().cloned());
        }
        let mut post = setup.maintain(post)?;
        setup.expire_tags(&mut post, observations);
        local.push(post);
    }

    let mut rounds = Vec::new();
    let mut current = local;
    if setup.maintenance.is_none() {
        let pl = matrix_power(pi, cfg.gossip_rounds);
        let bytes = current.iter().map(message_bytes).sum();
        current = (0..n)
            .map(|i| weighted_product(setup, &current, (0..n).map(|j| (j, pl[(i, j)]))))
            .collect::<Result<Vec<_>>>()?;
        rounds.push(GossipRound {
            components: current.iter().map(MaxMixture::len).collect(),
            message_bytes: bytes,
        });
    } else {
        for _ in 0..cfg.gossip_rounds {
            let bytes = current.iter().map(message_bytes).sum();
            let next = (0..n)
                .map(|i| {
                    let f = weighted_product(setup, &current, graph.neighbours(i).iter().map(|&j| (j, pi[(i, j)])))?;
                    setup.maintain(f)
                })
                .collect::<Result<Vec<_>>>()?;
            current = next;
            rounds.push(GossipRound {
                components: current.iter().map(MaxMixture::len).collect(),
                message_bytes: bytes,
            });
        }
    }

    let mut extraction = setup.extraction;
    extraction.n_sensors = n;
    let tracks = current
        .iter()
        .map(|f| Ok(tracker::extract_tracks(&f.raise(n as f64)?, &extraction, setup.alpha_df())))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecentralisedOutput {
        nodes: current,
        tracks,
        rounds,
    })
}

/// Per-sensor variance of an independent bound on a two-sensor joint
/// likelihood with covariance `[[σ², ρ], [ρ, σ²]]`: the largest eigenvalue
/// `σ² + |ρ|`, which is `σ² + ρ` for the usual positive correlation.
pub fn correlated_bound(sigma2: f64, rho: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || !(rho.abs() < sigma2) {
        return Err(Error::invalid(format!(
            "[[σ², ρ], [ρ, σ²]] is not positive definite for σ²={sigma2}, ρ={rho}"
        )));
    }
    Ok(sigma2 + rho.abs())
}

/// Linear-Gaussian stage `y = A z + v`, `v ~ N̄(0, Σ)` with `Σ` positive
/// semidefinite (a zero `Σ` is the indicator `𝕀(y = Az)`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStage {
    pub matrix: Matrix,
    pub noise: Matrix,
}

impl LinearStage {
    pub fn new(matrix: Matrix, noise: Matrix) -> Result<Self> {
        if noise.nrows() != matrix.nrows() {
            return Err(Error::invalid("stage noise does not match stage matrix"));
        }
        linalg::check_psd(&noise, "stage noise")?;
        Ok(Self { matrix, noise })
    }

    /// `N̄(y; A x, Σ)`; needs `Σ` positive definite.
    pub fn eval(&self, y: &Vector, x: &Vector) -> Result<f64> {
        crate::gaussian::eval_gaussian(y, &(&self.matrix * x), &self.noise)
    }
}

/// Effective likelihood `h_2(y | z) h_1(z | x)^{w}` maximised over `z`,
/// i.e. `y = A_2 A_1 x` with covariance `Σ_2 + A_2 (Σ_1 / w) A_2ᵀ`.
pub fn partial_dependence_likelihood(second: &LinearStage, first: &LinearStage, w: f64) -> Result<LinearStage> {
    if !(w > 0.0 && w <= 1.0) {
        return Err(Error::invalid(format!("power must lie in (0, 1], got {w}")));
    }
    if second.matrix.ncols() != first.matrix.nrows() {
        return Err(Error::invalid("stage dimensions are not composable"));
    }
    let mut noise = &second.noise + &second.matrix * (&first.noise / w) * second.matrix.transpose();
    linalg::symmetrise(&mut noise);
    LinearStage::new(&second.matrix * &first.matrix, noise)
}

/// Birth model for a node holding a `w` share of the information: weights
/// raised to `w`, unobserved coordinates' variances multiplied by `1/w`
/// (cross covariances by `1/√w`) and observed coordinates left alone.
pub fn birth_discount(birth: &BirthModel, observed: &[usize], w: f64) -> Result<BirthModel> {
    if !(w > 0.0 && w <= 1.0) {
        return Err(Error::invalid(format!("power must lie in (0, 1], got {w}")));
    }
    let dim = birth.mixture().dim();
    if observed.iter().any(|&i| i >= dim) {
        return Err(Error::invalid("observed coordinate out of range"));
    }
    let scale = Vector::from_fn(dim, |i, _| if observed.contains(&i) { 1.0 } else { w.sqrt().recip() });
    let d = Matrix::from_diagonal(&scale);
    let comps = birth
        .mixture()
        .components()
        .iter()
        .map(|c| {
            let mut cov = &d * c.cov() * &d;
            linalg::symmetrise(&mut cov);
            GaussianComponent::from_log_weight(c.log_weight() * w, c.mean().clone(), cov)
        })
        .collect::<Result<Vec<_>>>()?;
    BirthModel::new(MaxMixture::new(dim, comps)?, birth.scalar().powf(w))
}
