//! Gaussian max-mixtures: `F(x) = max_i α_i N̄(x; μ_i, P_i)`.
//!
//! The value `F(ψ) = 1` at the isolated "no target" state is implicit and
//! never stored. An empty mixture evaluates to 0 everywhere on the state
//! space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, GaussianComponent, ObsTag};
use crate::linalg::{self, Matrix, Vector};

/// Distance used to decide whether two components are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeDistance {
    Hellinger,
    Mahalanobis,
}

/// How the weight of a merged cluster is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergedWeight {
    /// Max-mixture semantics: the cluster keeps its largest weight.
    Max,
    /// Intensity semantics: weights add up.
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MixtureRecord", try_from = "MixtureRecord")]
pub struct MaxMixture {
    dim: usize,
    components: Vec<GaussianComponent>,
}

impl MaxMixture {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            components: Vec::new(),
        }
    }

    pub fn new(dim: usize, components: Vec<GaussianComponent>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("mixture dimension must be positive"));
        }
        if let Some(c) = components.iter().find(|c| c.dim() != dim) {
            return Err(Error::invalid(format!(
                "component of dimension {} in a mixture of dimension {dim}",
                c.dim()
            )));
        }
        if components.iter().any(|c| c.log_weight() > 0.0) {
            return Err(Error::invalid("max-mixture weights must not exceed 1"));
        }
        Ok(Self { dim, components })
    }

    pub(crate) fn from_vec_unchecked(dim: usize, components: Vec<GaussianComponent>) -> Self {
        Self { dim, components }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn into_components(self) -> Vec<GaussianComponent> {
        self.components
    }


    pub(crate) fn extend(&mut self, other: impl IntoIterator<Item = GaussianComponent>) {
        self.components.extend(other);
    }

    pub fn max_weight(&self) -> f64 {
        self.components
            .iter()
            .map(GaussianComponent::weight)
            .fold(0.0, f64::max)
    }

    /// `log F(x)`; `−∞` for the empty mixture.
    pub fn log_eval(&self, x: &Vector) -> Result<f64> {
        linalg::check_dim(x, self.dim, "evaluation point")?;
        let mut best = f64::NEG_INFINITY;
        for c in &self.components {
            best = best.max(c.log_eval(x)?);
        }
        Ok(best)
    }

    /// `F(x) = max_i α_i N̄(x; μ_i, P_i)`, 0 for the empty mixture.
    pub fn eval(&self, x: &Vector) -> Result<f64> {
        Ok(self.log_eval(x)?.exp())
    }

    /// `F^w`, with weights `α^w` and covariances `P/w`, for `w ∈ (0, 1]`.
    ///
    /// `w = 0` would give the constant function 1, which has no finite
    /// max-mixture representation.
    pub fn power(&self, w: f64) -> Result<Self> {
        if !(w > 0.0 && w <= 1.0) {
            return Err(Error::invalid(format!("power must lie in (0, 1], got {w}")));
        }
        Ok(self.raised_unchecked(w))
    }

    /// Drops observation tags older than `oldest_scan`. Extraction only
    /// compares tags inside its window, so older ones are dead weight.
    pub fn forget_tags_before(&mut self, oldest_scan: u32) {
        for c in &mut self.components {
            c.retain_tags(|t| t.scan >= oldest_scan);
        }
    }

    /// `F^e` for any positive exponent. Exponents above 1 are how a node
    /// holding a `1/n` share of the information reads it back at full scale.
    pub fn raise(&self, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::invalid(format!(
                "exponent must be positive and finite, got {exponent}"
            )));
        }
        Ok(self.raised_unchecked(exponent))
    }

    fn raised_unchecked(&self, w: f64) -> Self {
        if w == 1.0 {
            return self.clone();
        }
        Self {
            dim: self.dim,
            components: self.components.iter().map(|c| c.raised_unchecked(w)).collect(),
        }
    }

    /// Restriction to the coordinates in `keep` (0-based), i.e.
    /// `sup` over the dropped coordinates. Exact for Gaussian terms: the
    /// marginal keeps the weight and takes the sub-vector / principal
    /// sub-matrix.
    pub fn marginalise(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::invalid("marginalisation needs at least one coordinate"));
        }
        if let Some(&k) = keep.iter().find(|&&k| k >= self.dim) {
            return Err(Error::invalid(format!(
                "coordinate {k} out of range for dimension {}",
                self.dim
            )));
        }
        let components = self
            .components
            .iter()
            .map(|c| {
                let mean = Vector::from_iterator(keep.len(), keep.iter().map(|&i| c.mean()[i]));
                let cov = Matrix::from_fn(keep.len(), keep.len(), |r, s| c.cov()[(keep[r], keep[s])]);
                GaussianComponent::from_parts(c.log_weight(), mean, cov, c.tags().clone())
            })
            .collect();
        Ok(Self {
            dim: keep.len(),
            components,
        })
    }

    /// Drops components with weight strictly below `threshold`, keeping the
    /// order of the survivors.
    pub fn prune(&self, threshold: f64) -> Self {
        Self {
            dim: self.dim,
            components: prune_components(&self.components, threshold),
        }
    }

    /// Greedy clustering merge with max-mixture weights.
    pub fn merge(&self, distance: MergeDistance, threshold: f64) -> Result<Self> {
        Ok(Self {
            dim: self.dim,
            components: merge_components(&self.components, distance, threshold, MergedWeight::Max)?,
        })
    }

    /// Keeps the `cap` highest-weighted components.
    pub fn truncate(&self, cap: usize) -> Self {
        Self {
            dim: self.dim,
            components: truncate_components(&self.components, cap),
        }
    }

    /// Multiplies every weight by `factor ∈ (0, 1]`.
    pub fn scale(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::invalid(format!("scale factor must lie in (0, 1], got {factor}")));
        }
        let lf = factor.ln();
        let mut out = self.clone();
        for c in &mut out.components {
            c.add_log_weight(lf);
        }
        Ok(out)
    }
}

/// Product of two presence functions, as the cross-product mixture:
/// `max_i a_i(x) · max_j b_j(x) = max_{i,j} a_i(x) b_j(x)`.
/// No renormalisation takes place.
pub fn fuse_product(a: &MaxMixture, b: &MaxMixture) -> Result<MaxMixture> {
    fuse_product_above(a, b, f64::NEG_INFINITY)
}

/// [`fuse_product`] that skips pairs whose product weight is below
/// `exp(log_floor)`. Used when pruning follows directly, since pruning the
/// output at the same threshold gives the identical result.
pub(crate) fn fuse_product_above(a: &MaxMixture, b: &MaxMixture, log_floor: f64) -> Result<MaxMixture> {
    if a.dim != b.dim {
        return Err(Error::invalid(format!(
            "cannot fuse mixtures of dimension {} and {}",
            a.dim, b.dim
        )));
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for ca in &a.components {
        for cb in &b.components {
            let base = ca.log_weight() + cb.log_weight();
            if base < log_floor || base + gaussian::log_overlap_upper_bound(ca, cb) < log_floor {
                continue;
            }
            let (lo, chol) = gaussian::log_overlap(ca, cb)?;
            if base + lo < log_floor {
                continue;
            }
            out.push(gaussian::product_with_chol(ca, cb, lo, &chol));
        }
    }
    Ok(MaxMixture {
        dim: a.dim,
        components: out,
    })
}

/// Size of the components in a compact binary encoding: an f64 weight,
/// mean and covariance upper triangle, plus three u32 per tag.
pub(crate) fn wire_bytes(components: &[GaussianComponent]) -> usize {
    components
        .iter()
        .map(|c| {
            let d = c.dim();
            8 * (1 + d + d * (d + 1) / 2) + 12 * c.tags().len()
        })
        .sum()
}

pub fn prune_components(components: &[GaussianComponent], threshold: f64) -> Vec<GaussianComponent> {
    if threshold <= 0.0 {
        return components.to_vec();
    }
    let lt = threshold.ln();
    components
        .iter()
        .filter(|c| c.log_weight() >= lt)
        .cloned()
        .collect()
}

pub fn truncate_components(components: &[GaussianComponent], cap: usize) -> Vec<GaussianComponent> {
    if components.len() <= cap {
        return components.to_vec();
    }
    let mut order: Vec<usize> = (0..components.len()).collect();
    order.sort_by(|&i, &j| {
        components[j]
            .log_weight()
            .total_cmp(&components[i].log_weight())
            .then(i.cmp(&j))
    });
    let mut keep = order[..cap].to_vec();
    keep.sort_unstable();
    keep.into_iter().map(|i| components[i].clone()).collect()
}

/// Greedy merging in the style of GM-PHD reduction.
///
/// The highest-weighted remaining component seeds a cluster that absorbs
/// every remaining component within `threshold` of it. A cluster's mean
/// and covariance are moment matched with weight-proportional
/// coefficients; it keeps the seed's tags, so weak members cannot make it
/// claim observations it was never updated with. Singleton
/// clusters are returned untouched, and output order follows the seeds'
/// original positions.
pub fn merge_components(
    components: &[GaussianComponent],
    distance: MergeDistance,
    threshold: f64,
    rule: MergedWeight,
) -> Result<Vec<GaussianComponent>> {
    let m = components.len();
    if m < 2 {
        return Ok(components.to_vec());
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        components[j]
            .log_weight()
            .total_cmp(&components[i].log_weight())
            .then(i.cmp(&j))
    });

    let log_dets: Vec<f64> = match distance {
        MergeDistance::Hellinger => components
            .iter()
            .map(gaussian::log_det_cov)
            .collect::<Result<_>>()?,
        MergeDistance::Mahalanobis => Vec::new(),
    };
    let chols = match distance {
        MergeDistance::Mahalanobis => components
            .iter()
            .map(|c| c.chol())
            .collect::<Result<Vec<_>>>()?,
        MergeDistance::Hellinger => Vec::new(),
    };
    let traces: Vec<f64> = components.iter().map(|c| c.cov().trace()).collect();
    // merge iff H ≤ t ⟺ log B ≥ ln(1 − t²)
    let hellinger_log_floor = if threshold >= 1.0 {
        f64::NEG_INFINITY
    } else {
        (1.0 - threshold * threshold).ln()
    };

    let within = |seed: usize, j: usize| -> Result<bool> {
        let a = &components[seed];
        let b = &components[j];
        let dist2 = (a.mean() - b.mean()).norm_squared();
        match distance {
            MergeDistance::Hellinger => {
                if -0.25 * dist2 / (traces[seed] + traces[j]) < hellinger_log_floor {
                    return Ok(false);
                }
                let lb = gaussian::log_affinity_with(a, b, log_dets[seed], log_dets[j])?;
                Ok(lb >= hellinger_log_floor)
            }
            MergeDistance::Mahalanobis => {
                if dist2 / traces[j] > threshold {
                    return Ok(false);
                }
                let d = linalg::inv_quad_form(&chols[j], &(a.mean() - b.mean()));
                Ok(d <= threshold)
            }
        }
    };

    let mut used = vec![false; m];
    let mut merged: Vec<(usize, GaussianComponent)> = Vec::new();
    for &seed in &order {
        if used[seed] {
            continue;
        }
        used[seed] = true;
        let mut cluster = vec![seed];
        for &j in &order {
            if !used[j] && within(seed, j)? {
                used[j] = true;
                cluster.push(j);
            }
        }
        if cluster.len() == 1 {
            merged.push((seed, components[seed].clone()));
            continue;
        }
        merged.push((seed, moment_match(components, &cluster, rule)));
    }
    merged.sort_by_key(|(seed, _)| *seed);
    Ok(merged.into_iter().map(|(_, c)| c).collect())
}

fn moment_match(components: &[GaussianComponent], cluster: &[usize], rule: MergedWeight) -> GaussianComponent {
    let lw_max = cluster
        .iter()
        .map(|&i| components[i].log_weight())
        .fold(f64::NEG_INFINITY, f64::max);
    let rel: Vec<f64> = cluster
        .iter()
        .map(|&i| (components[i].log_weight() - lw_max).exp())
        .collect();
    let total: f64 = rel.iter().sum();
    let dim = components[cluster[0]].dim();
    let mut mean = Vector::zeros(dim);
    for (&i, &r) in cluster.iter().zip(&rel) {
        mean += components[i].mean() * (r / total);
    }
    let mut cov = Matrix::zeros(dim, dim);
    for (&i, &r) in cluster.iter().zip(&rel) {
        let d = components[i].mean() - &mean;
        cov += (components[i].cov() + &d * d.transpose()) * (r / total);
    }
    let tags = components[cluster[0]].tags().clone();
    linalg::symmetrise(&mut cov);
    let log_weight = match rule {
        MergedWeight::Max => lw_max,
        MergedWeight::Sum => lw_max + total.ln(),
    };
    GaussianComponent::from_parts(log_weight, mean, cov, tags)
}

/// Flat serialised form of one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub weight: f64,
    /// Present only when the linear weight underflows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_weight: Option<f64>,
    pub mean: Vec<f64>,
    /// Row-major.
    pub covariance: Vec<f64>,
    pub tags: Vec<ObsTag>,
}

impl From<&GaussianComponent> for ComponentRecord {
    fn from(c: &GaussianComponent) -> Self {
        let weight = c.weight();
        let d = c.dim();
        let mut covariance = Vec::with_capacity(d * d);
        for r in 0..d {
            for s in 0..d {
                covariance.push(c.cov()[(r, s)]);
            }
        }
        Self {
            weight,
            log_weight: (weight < f64::MIN_POSITIVE).then(|| c.log_weight()),
            mean: c.mean().iter().copied().collect(),
            covariance,
            tags: c.tags().iter().copied().collect(),
        }
    }
}

impl ComponentRecord {
    /// Rebuilds a component, validating dimensions and SPD-ness. The weight
    /// bound is checked by the caller (max-mixtures vs intensities).
    pub fn to_component(&self) -> Result<GaussianComponent> {
        let d = self.mean.len();
        if self.covariance.len() != d * d {
            return Err(Error::invalid(format!(
                "record covariance has {} entries, expected {}",
                self.covariance.len(),
                d * d
            )));
        }
        let mean = Vector::from_vec(self.mean.clone());
        let cov = Matrix::from_row_slice(d, d, &self.covariance);
        let lw = self.log_weight.unwrap_or(self.weight.ln());
        if lw.is_nan() {
            return Err(Error::invalid("record weight is not a number"));
        }
        let c = GaussianComponent::intensity(1.0, mean, cov)?;
        let mut c = c.with_tags(self.tags.iter().copied());
        c.set_log_weight(lw);
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRecord {
    pub dim: usize,
    pub components: Vec<ComponentRecord>,
}

impl From<&MaxMixture> for MixtureRecord {
    fn from(m: &MaxMixture) -> Self {
        Self {
            dim: m.dim,
            components: m.components.iter().map(ComponentRecord::from).collect(),
        }
    }
}

impl From<MaxMixture> for MixtureRecord {
    fn from(m: MaxMixture) -> Self {
        Self::from(&m)
    }
}

impl TryFrom<MixtureRecord> for MaxMixture {
    type Error = Error;

    fn try_from(r: MixtureRecord) -> Result<Self> {
        let comps = r
            .components
            .iter()
            .map(ComponentRecord::to_component)
            .collect::<Result<Vec<_>>>()?;
        MaxMixture::new(r.dim, comps)
    }
}
