//! The possibilistic analogue of the PHD filter on Gaussian max-mixtures.
//!
//! Prediction realises
//! `F_k(x) = α_b(x) ∨ sup_x' g(x | x') F_{k−1}(x')`, and the update
//! `F_k(x | Y) = α_df(x) F(x) ∨ max_y h(y|x) F(x) / (F_fa(y) ∨ sup h(y|·) F)`.
//! Survival possibility is taken to be 1 everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, GaussianComponent, ObsTag, UpdateTemplate};
use crate::linalg::{self, Matrix, Vector};
use crate::mixture::{MaxMixture, MergeDistance};

/// Linear dynamics `g(x | x') = N̄(x; G x', Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    transition: Matrix,
    process_noise: Matrix,
}

impl MotionModel {
    /// `Q` must be symmetric positive semidefinite; the nearly-constant
    /// velocity noise is rank deficient.
    pub fn new(transition: Matrix, process_noise: Matrix) -> Result<Self> {
        if !transition.is_square() || transition.nrows() == 0 {
            return Err(Error::invalid("transition matrix must be square and non-empty"));
        }
        if process_noise.shape() != transition.shape() {
            return Err(Error::invalid("process noise must match the transition matrix"));
        }
        linalg::check_psd(&process_noise, "process noise")?;
        Ok(Self {
            transition,
            process_noise,
        })
    }

    pub fn dim(&self) -> usize {
        self.transition.nrows()
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn process_noise(&self) -> &Matrix {
        &self.process_noise
    }
}

/// Axis-aligned box in (global) observation space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldOfView {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FieldOfView {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::invalid("field of view bounds must have equal positive length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::invalid("field of view is degenerate"));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, y: &Vector) -> bool {
        y.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn centre(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }
}

/// Linear-Gaussian sensor `h(y | x) = N̄(y; H(x − x_s), R)` with constant
/// detection-failure possibility `alpha_df` inside the field of view and 1
/// outside of it.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    matrix: Matrix,
    noise: Matrix,
    alpha_df: f64,
    fov: FieldOfView,
    sensor_offset: Vector,
}

impl ObservationModel {
    pub fn new(
        matrix: Matrix,
        noise: Matrix,
        alpha_df: f64,
        fov: FieldOfView,
        sensor_offset: Vector,
    ) -> Result<Self> {
        if !(alpha_df > 0.0 && alpha_df <= 1.0) {
            return Err(Error::invalid(format!(
                "detection-failure possibility must lie in (0, 1], got {alpha_df}"
            )));
        }
        if noise.nrows() != matrix.nrows() {
            return Err(Error::invalid("observation noise does not match observation matrix"));
        }
        linalg::check_spd(&noise, "observation noise")?;
        if fov.dim() != matrix.nrows() {
            return Err(Error::invalid("field of view does not match observation dimension"));
        }
        linalg::check_dim(&sensor_offset, matrix.ncols(), "sensor offset")?;
        Ok(Self {
            matrix,
            noise,
            alpha_df,
            fov,
            sensor_offset,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn noise(&self) -> &Matrix {
        &self.noise
    }

    pub fn alpha_df(&self) -> f64 {
        self.alpha_df
    }

    pub fn fov(&self) -> &FieldOfView {
        &self.fov
    }

    pub fn sensor_offset(&self) -> &Vector {
        &self.sensor_offset
    }

    pub fn state_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn obs_dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `α_df(x)`: the configured value when `Hx` lies in the field of view,
    /// 1 otherwise.
    pub fn alpha_df_at(&self, x: &Vector) -> f64 {
        if self.fov.contains(&(&self.matrix * x)) {
            self.alpha_df
        } else {
            1.0
        }
    }

    /// Maps a sensor-local observation `H(x − x_s) + v` to the global frame.
    pub fn to_global(&self, y_local: &Vector) -> Vector {
        y_local + &self.matrix * &self.sensor_offset
    }

    pub fn with_alpha_df(&self, alpha_df: f64) -> Result<Self> {
        Self::new(
            self.matrix.clone(),
            self.noise.clone(),
            alpha_df,
            self.fov.clone(),
            self.sensor_offset.clone(),
        )
    }
}

/// Birth possibility `α_b`: a max-mixture plus the constant value it
/// approximates over the observable region.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthModel {
    mixture: MaxMixture,
    scalar: f64,
}

impl BirthModel {
    pub fn new(mixture: MaxMixture, scalar: f64) -> Result<Self> {
        if !(scalar > 0.0 && scalar <= 1.0) {
            return Err(Error::invalid(format!("birth possibility must lie in (0, 1], got {scalar}")));
        }
        if mixture.components().iter().any(|c| !c.tags().is_empty()) {
            return Err(Error::invalid("birth components must not carry observation tags"));
        }
        Ok(Self { mixture, scalar })
    }

    pub fn none(dim: usize) -> Self {
        Self {
            mixture: MaxMixture::empty(dim),
            scalar: 1.0,
        }
    }

    pub fn mixture(&self) -> &MaxMixture {
        &self.mixture
    }

    pub fn scalar(&self) -> f64 {
        self.scalar
    }

    /// `α_b^w`.
    pub fn power(&self, w: f64) -> Result<Self> {
        Ok(Self {
            mixture: self.mixture.power(w)?,
            scalar: self.scalar.powf(w),
        })
    }
}

/// Constant false-alarm presence `F_fa` on the observation space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterModel {
    f_fa: f64,
}

impl ClutterModel {
    pub fn new(f_fa: f64) -> Result<Self> {
        if !(f_fa > 0.0 && f_fa <= 1.0) {
            return Err(Error::invalid(format!("false-alarm presence must lie in (0, 1], got {f_fa}")));
        }
        Ok(Self { f_fa })
    }

    pub fn f_fa(&self) -> f64 {
        self.f_fa
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub tau_tilde: f64,
    pub n_sensors: usize,
    /// Number of most recent scans whose observation tags count for the
    /// shared-observation check.
    pub window: u32,
}

impl ExtractionConfig {
    pub fn new(tau_tilde: f64, n_sensors: usize, window: u32) -> Result<Self> {
        if !(tau_tilde > 0.0 && tau_tilde <= 1.0) {
            return Err(Error::invalid(format!("tau_tilde must lie in (0, 1], got {tau_tilde}")));
        }
        if n_sensors == 0 || window == 0 {
            return Err(Error::invalid("n_sensors and window must be positive"));
        }
        Ok(Self {
            tau_tilde,
            n_sensors,
            window,
        })
    }

    /// `τ^n` with `τ = τ̃ α_df^{α_df}`.
    pub fn confirmation_threshold(&self, alpha_df: f64) -> f64 {
        (self.tau_tilde * alpha_df.powf(alpha_df)).powi(self.n_sensors as i32)
    }
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            tau_tilde: 0.1,
            n_sensors: 1,
            window: 10,
        }
    }
}

/// Mixture-reduction parameters: prune, then merge, then cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaintenanceConfig {
    pub prune_threshold: f64,
    pub merge_threshold: f64,
    pub cap: usize,
}

impl Default for MaintenanceConfig {
    fn default() -> Self {
        Self {
            prune_threshold: 1e-4,
            merge_threshold: 0.75,
            cap: 2000,
        }
    }
}

/// A sensor-local observation and its identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub tag: ObsTag,
    pub value: Vector,
}

/// Extracted target estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub mean: Vector,
    pub covariance: Matrix,
    pub weight: f64,
}

/// Predicted presence function with transition power `w`:
/// components map to `(Gμ, GPGᵀ + Q/w)` with unchanged weights, then the
/// birth terms are appended.
pub fn predict(f: &MaxMixture, motion: &MotionModel, birth: &BirthModel, w: f64) -> Result<MaxMixture> {
    if !(w > 0.0 && w <= 1.0) {
        return Err(Error::invalid(format!("transition power must lie in (0, 1], got {w}")));
    }
    if f.dim() != motion.dim() || birth.mixture().dim() != motion.dim() {
        return Err(Error::invalid("presence function, motion and birth dimensions differ"));
    }
    let mut out = MaxMixture::from_vec_unchecked(
        f.dim(),
        f.components()
            .iter()
            .map(|c| gaussian::predict_unchecked(c, motion.transition(), motion.process_noise(), w))
            .collect(),
    );
    out.extend(birth.mixture().components().iter().cloned());
    Ok(out)
}

/// Multi-observation update.
///
/// The output lists the missed-detection copies first (weight scaled by
/// `α_df` at the component mean), then, for each observation in order, one
/// updated copy of every component with weight `α_i q_i(y) / D(y)` where
/// `D(y) = F_fa ∨ max_j α_j q_j(y)`. No maintenance is applied.
pub fn update(
    f: &MaxMixture,
    observations: &[Observation],
    obs: &ObservationModel,
    clutter: &ClutterModel,
) -> Result<MaxMixture> {
    if f.dim() != obs.state_dim() {
        return Err(Error::invalid("presence function and observation model dimensions differ"));
    }
    let templates = f
        .components()
        .iter()
        .map(|c| UpdateTemplate::new(c, obs.matrix(), obs.noise()))
        .collect::<Result<Vec<_>>>()?;
    let globals = observations
        .iter()
        .map(|o| {
            linalg::check_dim(&o.value, obs.obs_dim(), "observation")?;
            Ok(obs.to_global(&o.value))
        })
        .collect::<Result<Vec<_>>>()?;

    let m = f.len();
    let mut out = Vec::with_capacity(m * (1 + observations.len()));
    for c in f.components() {
        let mut missed = c.clone();
        missed.add_log_weight(obs.alpha_df_at(c.mean()).ln());
        out.push(missed);
    }

    let log_f_fa = clutter.f_fa().ln();
    let mut per_comp = Vec::with_capacity(m);
    for (o, y) in observations.iter().zip(&globals) {
        per_comp.clear();
        let mut log_denominator = log_f_fa;
        for (c, t) in f.components().iter().zip(&templates) {
            let (lq, innovation) = t.log_likelihood(y);
            let lw = c.log_weight() + lq;
            log_denominator = log_denominator.max(lw);
            per_comp.push((lw, innovation));
        }
        for ((c, t), (lw, innovation)) in f.components().iter().zip(&templates).zip(per_comp.drain(..)) {
            let mut tags = c.tags().clone();
            tags.insert(o.tag);
            out.push(GaussianComponent::from_parts(
                (lw - log_denominator).min(0.0),
                t.posterior_mean(c.mean(), &innovation),
                t.posterior_cov().clone(),
                tags,
            ));
        }
    }
    Ok(MaxMixture::from_vec_unchecked(f.dim(), out))
}

/// Prune (strictly below `prune_threshold`), merge with the Hellinger
/// distance at `merge_threshold`, then keep the `cap` heaviest components.
pub fn maintain(f: &MaxMixture, prune_threshold: f64, merge_threshold: f64, cap: usize) -> Result<MaxMixture> {
    Ok(f
        .prune(prune_threshold)
        .merge(MergeDistance::Hellinger, merge_threshold)?
        .truncate(cap))
}

pub fn maintain_with(f: &MaxMixture, cfg: &MaintenanceConfig) -> Result<MaxMixture> {
    maintain(f, cfg.prune_threshold, cfg.merge_threshold, cfg.cap)
}

/// Confirms components with weight `≥ τ^n`, `τ = τ̃ α_df^{α_df}`, then
/// greedily keeps the heaviest ones whose recent observation tags are
/// disjoint from those already kept. Untagged (birth-only) components are
/// never confirmed.
pub fn extract_tracks(f: &MaxMixture, cfg: &ExtractionConfig, alpha_df: f64) -> Vec<Track> {
    select_disjoint(f.components(), cfg.confirmation_threshold(alpha_df), cfg.window)
}

pub(crate) fn select_disjoint(components: &[GaussianComponent], threshold: f64, window: u32) -> Vec<Track> {
    let log_threshold = threshold.ln();
    let mut candidates: Vec<usize> = (0..components.len())
        .filter(|&i| components[i].log_weight() >= log_threshold && !components[i].tags().is_empty())
        .collect();
    // ties go to the lower index
    candidates.sort_by(|&i, &j| {
        components[j]
            .log_weight()
            .total_cmp(&components[i].log_weight())
            .then(i.cmp(&j))
    });
    let latest = candidates
        .iter()
        .flat_map(|&i| components[i].tags().iter().map(|t| t.scan))
        .max()
        .unwrap_or(0);
    let recent = |t: &ObsTag| t.scan + window > latest;

    let mut claimed = gaussian::TagSet::new();
    let mut tracks = Vec::new();
    for i in candidates {
        let c = &components[i];
        if c.tags().iter().filter(|t| recent(t)).any(|t| claimed.contains(t)) {
            continue;
        }
        claimed.extend(c.tags().iter().copied().filter(|t| recent(t)));
        tracks.push(Track {
            mean: c.mean().clone(),
            covariance: c.cov().clone(),
            weight: c.weight(),
        });
    }
    tracks
}
