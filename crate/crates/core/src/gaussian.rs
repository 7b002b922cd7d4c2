//! Weighted Gaussian possibility functions and their closed-form algebra.
//!
//! A component represents `α · N̄(x; μ, P)` where
//! `N̄(x; μ, P) = exp(−½ (x−μ)ᵀ P⁻¹ (x−μ))` is the unnormalised Gaussian
//! possibility function (its supremum is 1, it is not a density).
//! Weights are stored in the log domain so that long products over many
//! sensors do not underflow.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Chol, Matrix, Vector};

/// Identifier of a single observation: the sensor that collected it, the
/// scan it belongs to and its index within that sensor's scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObsTag {
    pub sensor: u32,
    pub scan: u32,
    pub index: u32,
}

impl ObsTag {
    pub fn new(sensor: u32, scan: u32, index: u32) -> Self {
        Self { sensor, scan, index }
    }
}

pub type TagSet = BTreeSet<ObsTag>;

/// One weighted Gaussian term of a max-mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    log_weight: f64,
    mean: Vector,
    cov: Matrix,
    tags: TagSet,
}

impl GaussianComponent {
    /// Builds a possibilistic component; requires `0 < weight ≤ 1` and an
    /// SPD covariance matching the mean's dimension.
    pub fn new(weight: f64, mean: Vector, cov: Matrix) -> Result<Self> {
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::invalid(format!(
                "component weight must lie in (0, 1], got {weight}"
            )));
        }
        Self::validated(weight.ln(), mean, cov)
    }

    /// Builds a component from a log-weight `≤ 0` (weights below the
    /// smallest positive double are representable this way).
    pub fn from_log_weight(log_weight: f64, mean: Vector, cov: Matrix) -> Result<Self> {
        if log_weight.is_nan() || log_weight > 0.0 {
            return Err(Error::invalid(format!(
                "log-weight must be ≤ 0, got {log_weight}"
            )));
        }
        Self::validated(log_weight, mean, cov)
    }

    /// Builds an intensity component for the probabilistic baseline, where
    /// the weight is an expected target count and may exceed 1.
    pub fn intensity(weight: f64, mean: Vector, cov: Matrix) -> Result<Self> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::invalid(format!(
                "intensity weight must be finite and ≥ 0, got {weight}"
            )));
        }
        Self::validated(weight.ln(), mean, cov)
    }

    fn validated(log_weight: f64, mean: Vector, cov: Matrix) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::invalid("component dimension must be positive"));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("component mean has non-finite entries"));
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::invalid(format!(
                "covariance is {}x{} but mean has dimension {}",
                cov.nrows(),
                cov.ncols(),
                mean.len()
            )));
        }
        linalg::check_spd(&cov, "component covariance")?;
        Ok(Self {
            log_weight,
            mean,
            cov,
            tags: TagSet::new(),
        })
    }

    /// Internal constructor for values produced by closed-form operations on
    /// already validated components.
    pub(crate) fn from_parts(log_weight: f64, mean: Vector, cov: Matrix, tags: TagSet) -> Self {
        Self {
            log_weight,
            mean,
            cov,
            tags,
        }
    }

    pub fn with_tags(mut self, tags: impl IntoIterator<Item = ObsTag>) -> Self {
        self.tags = tags.into_iter().collect();
        self
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }

    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }

    pub fn tags(&self) -> &TagSet {
        &self.tags
    }

    pub(crate) fn retain_tags(&mut self, keep: impl FnMut(&ObsTag) -> bool) {
        self.tags.retain(keep);
    }

    pub(crate) fn add_log_weight(&mut self, delta: f64) {
        self.log_weight += delta;
    }

    pub(crate) fn set_log_weight(&mut self, log_weight: f64) {
        self.log_weight = log_weight;
    }

    pub(crate) fn chol(&self) -> Result<Chol> {
        linalg::cholesky(&self.cov, "component covariance")
    }

    /// `log(α N̄(x; μ, P))`.
    pub fn log_eval(&self, x: &Vector) -> Result<f64> {
        linalg::check_dim(x, self.dim(), "evaluation point")?;
        let chol = self.chol()?;
        Ok(self.log_weight - 0.5 * linalg::inv_quad_form(&chol, &(x - &self.mean)))
    }

    /// `α N̄(x; μ, P)`.
    pub fn eval(&self, x: &Vector) -> Result<f64> {
        Ok(self.log_eval(x)?.exp())
    }

    /// `[α N̄(·; μ, P)]^e = α^e N̄(·; μ, P/e)` for any positive exponent.
    pub fn raise(&self, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::invalid(format!(
                "exponent must be positive and finite, got {exponent}"
            )));
        }
        Ok(self.raised_unchecked(exponent))
    }

    pub(crate) fn raised_unchecked(&self, exponent: f64) -> Self {
        Self {
            log_weight: self.log_weight * exponent,
            mean: self.mean.clone(),
            cov: &self.cov / exponent,
            tags: self.tags.clone(),
        }
    }
}

/// `N̄(x; μ, P) = exp(−½ (x−μ)ᵀ P⁻¹ (x−μ))`.
pub fn eval_gaussian(x: &Vector, mean: &Vector, cov: &Matrix) -> Result<f64> {
    linalg::check_dim(x, mean.len(), "evaluation point")?;
    if cov.nrows() != mean.len() {
        return Err(Error::invalid("covariance and mean dimensions differ"));
    }
    let chol = linalg::check_spd(cov, "covariance")?;
    Ok((-0.5 * linalg::inv_quad_form(&chol, &(x - mean))).exp())
}

/// Log of the overlap factor `N̄(μ_a; μ_b, P_a + P_b)` together with the
/// Cholesky factor of `P_a + P_b`.
pub(crate) fn log_overlap(a: &GaussianComponent, b: &GaussianComponent) -> Result<(f64, Chol)> {
    let sum = &a.cov + &b.cov;
    let chol = linalg::cholesky(&sum, "sum of covariances")?;
    let delta = &a.mean - &b.mean;
    Ok((-0.5 * linalg::inv_quad_form(&chol, &delta), chol))
}

/// Cheap upper bound on `log N̄(μ_a; μ_b, P_a + P_b)` using
/// `δᵀ S⁻¹ δ ≥ ‖δ‖² / tr S`.
pub(crate) fn log_overlap_upper_bound(a: &GaussianComponent, b: &GaussianComponent) -> f64 {
    let mut dist2 = 0.0;
    for i in 0..a.mean.len() {
        let d = a.mean[i] - b.mean[i];
        dist2 += d * d;
    }
    -0.5 * dist2 / (a.cov.trace() + b.cov.trace())
}

pub(crate) fn product_with_chol(
    a: &GaussianComponent,
    b: &GaussianComponent,
    log_overlap: f64,
    sum_chol: &Chol,
) -> GaussianComponent {
    // K = P_a (P_a + P_b)⁻¹, P = P_a − K P_a, μ = μ_a + K (μ_b − μ_a)
    let gain_t = sum_chol.solve(&a.cov);
    let gain = gain_t.transpose();
    let mean = &a.mean + &gain * (&b.mean - &a.mean);
    let mut cov = &a.cov - &gain * &a.cov;
    linalg::symmetrise(&mut cov);
    let tags = if b.tags.is_empty() {
        a.tags.clone()
    } else if a.tags.is_empty() {
        b.tags.clone()
    } else {
        a.tags.union(&b.tags).copied().collect()
    };
    GaussianComponent::from_parts(a.log_weight + b.log_weight + log_overlap, mean, cov, tags)
}

/// Pointwise product of two weighted Gaussian possibility functions, which
/// is again a weighted Gaussian:
/// `α_a N̄(x; μ_a, P_a) · α_b N̄(x; μ_b, P_b) = α N̄(x; μ, P)` with
/// `P = (P_a⁻¹ + P_b⁻¹)⁻¹` and `α = α_a α_b N̄(μ_a; μ_b, P_a + P_b)`.
pub fn product_pair(a: &GaussianComponent, b: &GaussianComponent) -> Result<GaussianComponent> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!(
            "cannot multiply components of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let (lo, chol) = log_overlap(a, b)?;
    Ok(product_with_chol(a, b, lo, &chol))
}

/// Quantities of a conjugate update that do not depend on the observation.
pub(crate) struct UpdateTemplate {
    predicted_obs: Vector,
    innovation_chol: Chol,
    gain: Matrix,
    posterior_cov: Matrix,
    log_det_innovation: f64,
}

impl UpdateTemplate {
    pub(crate) fn new(c: &GaussianComponent, h: &Matrix, r: &Matrix) -> Result<Self> {
        if h.ncols() != c.dim() || h.nrows() != r.nrows() || !r.is_square() {
            return Err(Error::invalid(format!(
                "observation matrix {}x{} and noise {}x{} do not fit state dimension {}",
                h.nrows(),
                h.ncols(),
                r.nrows(),
                r.ncols(),
                c.dim()
            )));
        }
        let pht = &c.cov * h.transpose();
        let mut s = h * &pht + r;
        linalg::symmetrise(&mut s);
        let innovation_chol = linalg::cholesky(&s, "innovation covariance")
            .map_err(|_| Error::numerical("innovation covariance is singular"))?;
        // K = P Hᵀ S⁻¹
        let gain = innovation_chol.solve(&pht.transpose()).transpose();
        let mut posterior_cov = &c.cov - &gain * h * &c.cov;
        linalg::symmetrise(&mut posterior_cov);
        let log_det_innovation = linalg::log_det(&innovation_chol);
        Ok(Self {
            predicted_obs: h * &c.mean,
            innovation_chol,
            gain,
            posterior_cov,
            log_det_innovation,
        })
    }

    /// Returns `(log q, innovation)` for observation `y`, with
    /// `q = N̄(y; Hμ, S)`.
    pub(crate) fn log_likelihood(&self, y: &Vector) -> (f64, Vector) {
        let innovation = y - &self.predicted_obs;
        let lq = -0.5 * linalg::inv_quad_form(&self.innovation_chol, &innovation);
        (lq, innovation)
    }

    /// Log of the normalised Gaussian density `N(y; Hμ, S)`.
    pub(crate) fn log_density(&self, y: &Vector) -> f64 {
        let (lq, _) = self.log_likelihood(y);
        let d = y.len() as f64;
        lq - 0.5 * (d * (2.0 * std::f64::consts::PI).ln() + self.log_det_innovation)
    }

    pub(crate) fn posterior_mean(&self, prior_mean: &Vector, innovation: &Vector) -> Vector {
        prior_mean + &self.gain * innovation
    }

    pub(crate) fn posterior_cov(&self) -> &Matrix {
        &self.posterior_cov
    }
}

/// Conjugate update of one component with a linear-Gaussian likelihood
/// `N̄(y; Hx, R)`.
///
/// Returns `q = sup_x N̄(y; Hx, R) N̄(x; μ, P) = N̄(y; Hμ, HPHᵀ + R)` and the
/// posterior component (Kalman mean and covariance). The posterior keeps the
/// prior weight; composing `q` into the mixture weight is left to the
/// caller. When `tag` is given it is added to the posterior's tag set.
pub fn bayes_update_component(
    c: &GaussianComponent,
    y: &Vector,
    tag: Option<ObsTag>,
    h: &Matrix,
    r: &Matrix,
) -> Result<(f64, GaussianComponent)> {
    linalg::check_dim(y, h.nrows(), "observation")?;
    let template = UpdateTemplate::new(c, h, r)?;
    let (lq, innovation) = template.log_likelihood(y);
    let mut tags = c.tags.clone();
    if let Some(t) = tag {
        tags.insert(t);
    }
    let post = GaussianComponent::from_parts(
        c.log_weight,
        template.posterior_mean(&c.mean, &innovation),
        template.posterior_cov().clone(),
        tags,
    );
    Ok((lq.exp(), post))
}

pub(crate) fn predict_unchecked(
    c: &GaussianComponent,
    transition: &Matrix,
    process_noise: &Matrix,
    power: f64,
) -> GaussianComponent {
    let mean = transition * &c.mean;
    let mut cov = transition * &c.cov * transition.transpose() + process_noise / power;
    linalg::symmetrise(&mut cov);
    GaussianComponent::from_parts(c.log_weight, mean, cov, c.tags.clone())
}

/// `sup_x N̄(x_k; Gx, Q/w) · α N̄(x; μ, P) = α N̄(x_k; Gμ, GPGᵀ + Q/w)`.
///
/// `Q` may be rank deficient (the usual nearly-constant-velocity noise is)
/// but must be positive semidefinite.
pub fn sup_predict_component(
    c: &GaussianComponent,
    transition: &Matrix,
    process_noise: &Matrix,
    power: f64,
) -> Result<GaussianComponent> {
    if !(power > 0.0 && power <= 1.0) {
        return Err(Error::invalid(format!(
            "transition power must lie in (0, 1], got {power}"
        )));
    }
    if transition.nrows() != c.dim() || transition.ncols() != c.dim() {
        return Err(Error::invalid("transition matrix does not fit the state"));
    }
    if process_noise.nrows() != c.dim() {
        return Err(Error::invalid("process noise does not fit the state"));
    }
    linalg::check_psd(process_noise, "process noise")?;
    let out = predict_unchecked(c, transition, process_noise, power);
    linalg::cholesky(out.cov(), "predicted covariance")?;
    Ok(out)
}

/// Log-determinants of a component's covariance, cached for repeated
/// distance evaluations.
pub(crate) fn log_det_cov(c: &GaussianComponent) -> Result<f64> {
    Ok(linalg::log_det(&c.chol()?))
}

pub(crate) fn log_affinity_with(
    a: &GaussianComponent,
    b: &GaussianComponent,
    log_det_a: f64,
    log_det_b: f64,
) -> Result<f64> {
    let d = a.dim() as f64;
    let sum = &a.cov + &b.cov;
    let chol = linalg::cholesky(&sum, "sum of covariances")?;
    let delta = &a.mean - &b.mean;
    let lb = -0.25 * linalg::inv_quad_form(&chol, &delta)
        + 0.5 * d * std::f64::consts::LN_2
        + 0.25 * (log_det_a + log_det_b)
        - 0.5 * linalg::log_det(&chol);
    Ok(lb.min(0.0))
}

/// Hellinger distance between the shapes of two Gaussian possibility
/// functions (weights ignored): `sqrt(1 − B)` with the normalised
/// Bhattacharyya coefficient
/// `B = ∫√(f_a f_b) / √(∫f_a ∫f_b)
///    = N̄(μ_a; μ_b, 2(P_a+P_b)) det(P_m)^{1/2} / (det P_a det P_b)^{1/4}`,
/// `P_m = 2(P_a⁻¹ + P_b⁻¹)⁻¹`.
pub fn hellinger_distance(a: &GaussianComponent, b: &GaussianComponent) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::invalid("components have different dimensions"));
    }
    let lda = log_det_cov(a)?;
    let ldb = log_det_cov(b)?;
    let lb = log_affinity_with(a, b, lda, ldb)?;
    Ok((1.0 - lb.exp()).max(0.0).sqrt())
}

/// Squared Mahalanobis distance `(μ_b − μ_a)ᵀ P_a⁻¹ (μ_b − μ_a)`.
pub fn mahalanobis_distance(a: &GaussianComponent, b: &GaussianComponent) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::invalid("components have different dimensions"));
    }
    let chol = a.chol()?;
    Ok(linalg::inv_quad_form(&chol, &(&b.mean - &a.mean)))
}
