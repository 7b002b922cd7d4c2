//! Gaussian-mixture PHD filter with covariance-intersection fusion, the
//! probabilistic counterpart of the possibilistic pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{GossipRound, NetworkGraph};
use crate::gaussian::{self, GaussianComponent, UpdateTemplate};
use crate::linalg::{self, Matrix};
use crate::mixture::{merge_components, prune_components, truncate_components, MergeDistance, MergedWeight};
use crate::tracker::{self, MotionModel, Observation, ObservationModel, Track};

/// Intensity function `Σ_i w_i N(x; μ_i, P_i)`; weights are expected
/// target counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Intensity {
    dim: usize,
    components: Vec<GaussianComponent>,
}

impl Intensity {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            components: Vec::new(),
        }
    }

    pub fn new(dim: usize, components: Vec<GaussianComponent>) -> Result<Self> {
        if components.iter().any(|c| c.dim() != dim) {
            return Err(Error::invalid("intensity components have inconsistent dimensions"));
        }
        Ok(Self { dim, components })
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

    /// Expected number of targets.
    pub fn mass(&self) -> f64 {
        self.components.iter().map(GaussianComponent::weight).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhdParams {
    pub p_d: f64,
    pub p_s: f64,
    /// Clutter intensity `κ = λ_fa / V` per unit observation volume.
    pub clutter_intensity: f64,
    pub prune_threshold: f64,
    /// Squared Mahalanobis distance for merging and CI pairing.
    pub merge_threshold: f64,
    pub cap: usize,
    pub tau_tilde: f64,
    pub window: u32,
}

impl Default for PhdParams {
    fn default() -> Self {
        Self {
            p_d: 0.7,
            p_s: 1.0 - 1e-3,
            clutter_intensity: 1e-5,
            prune_threshold: 5e-4,
            merge_threshold: 8.0,
            cap: 2000,
            tau_tilde: 0.1,
            window: 10,
        }
    }
}

impl PhdParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_d) || !(0.0..=1.0).contains(&self.p_s) {
            return Err(Error::invalid("probabilities must lie in [0, 1]"));
        }
        if !(self.clutter_intensity >= 0.0) || !(self.tau_tilde > 0.0) || !(self.merge_threshold >= 0.0) {
            return Err(Error::invalid("clutter intensity, tau_tilde and merge threshold must be positive"));
        }
        Ok(())
    }

    /// `τ̃ (1 − p_d)^{n (1 − p_d)}`.
    pub fn confirmation_threshold(&self, n: usize) -> f64 {
        let q = 1.0 - self.p_d;
        self.tau_tilde * q.powf(n as f64 * q)
    }
}

/// Weights times `p_s`, moments through the linear dynamics, then the birth
/// intensity appended.
pub fn phd_predict(f: &Intensity, motion: &MotionModel, birth: &Intensity, params: &PhdParams) -> Result<Intensity> {
    if f.dim() != motion.dim() || birth.dim() != motion.dim() {
        return Err(Error::invalid("intensity, motion and birth dimensions differ"));
    }
    let lps = params.p_s.ln();
    let mut out: Vec<_> = f
        .components()
        .iter()
        .map(|c| {
            let mut p = gaussian::predict_unchecked(c, motion.transition(), motion.process_noise(), 1.0);
            p.add_log_weight(lps);
            p
        })
        .collect();
    out.extend(birth.components().iter().cloned());
    Ok(Intensity {
        dim: f.dim(),
        components: out,
    })
}

/// Standard GM-PHD update. Detection probability is `p_d` for components
/// whose mean projects into the sensor's field of view and 0 otherwise.
pub fn phd_update(
    f: &Intensity,
    observations: &[Observation],
    obs: &ObservationModel,
    params: &PhdParams,
) -> Result<Intensity> {
    if f.dim() != obs.state_dim() {
        return Err(Error::invalid("intensity and observation model dimensions differ"));
    }
    let templates = f
        .components()
        .iter()
        .map(|c| UpdateTemplate::new(c, obs.matrix(), obs.noise()))
        .collect::<Result<Vec<_>>>()?;
    let p_d: Vec<f64> = f
        .components()
        .iter()
        .map(|c| if obs.alpha_df_at(c.mean()) < 1.0 { params.p_d } else { 0.0 })
        .collect();

    let mut out = Vec::with_capacity(f.len() * (1 + observations.len()));
    for (c, &pd) in f.components().iter().zip(&p_d) {
        let mut missed = c.clone();
        missed.add_log_weight((1.0 - pd).ln());
        out.push(missed);
    }
    for o in observations {
        linalg::check_dim(&o.value, obs.obs_dim(), "observation")?;
        let y = obs.to_global(&o.value);
        let terms: Vec<_> = f
            .components()
            .iter()
            .zip(&templates)
            .zip(&p_d)
            .map(|((c, t), &pd)| {
                let (_, innovation) = t.log_likelihood(&y);
                (pd.ln() + c.log_weight() + t.log_density(&y), innovation)
            })
            .collect();
        let total: f64 = params.clutter_intensity + terms.iter().map(|(lw, _)| lw.exp()).sum::<f64>();
        let lt = total.ln();
        for ((c, t), (lw, innovation)) in f.components().iter().zip(&templates).zip(terms) {
            if lw == f64::NEG_INFINITY {
                continue;
            }
            let mut tags = c.tags().clone();
            tags.insert(o.tag);
            out.push(GaussianComponent::from_parts(
                lw - lt,
                t.posterior_mean(c.mean(), &innovation),
                t.posterior_cov().clone(),
                tags,
            ));
        }
    }
    Ok(Intensity {
        dim: f.dim(),
        components: out,
    })
}

/// Prune, merge (Mahalanobis, summed weights), cap.
pub fn phd_maintain(f: &Intensity, params: &PhdParams) -> Result<Intensity> {
    let pruned = prune_components(&f.components, params.prune_threshold);
    let merged = merge_components(&pruned, MergeDistance::Mahalanobis, params.merge_threshold, MergedWeight::Sum)?;
    Ok(Intensity {
        dim: f.dim,
        components: truncate_components(&merged, params.cap),
    })
}

/// Covariance intersection of two intensities.
///
/// Components are paired greedily by increasing squared Mahalanobis
/// distance `δᵀ(P_A + P_B)⁻¹δ`, gated at `gate`. A pair becomes
/// `P = (ωP_A⁻¹ + (1−ω)P_B⁻¹)⁻¹`, `μ = P(ωP_A⁻¹μ_A + (1−ω)P_B⁻¹μ_B)` with
/// weight `w_A^ω w_B^{1−ω}`; paired weights are then rescaled so that their
/// total is `M_A^ω M_B^{1−ω}` for the paired input masses. Unpaired
/// components pass through with weight times `ω` (from A) or `1 − ω`
/// (from B).
pub fn ci_fuse(a: &Intensity, b: &Intensity, omega: f64, gate: f64) -> Result<Intensity> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::invalid(format!("CI weight must lie in (0, 1), got {omega}")));
    }
    if a.dim() != b.dim() {
        return Err(Error::invalid("cannot fuse intensities of different dimensions"));
    }
    let mut pairs = Vec::new();
    for (i, ca) in a.components().iter().enumerate() {
        for (j, cb) in b.components().iter().enumerate() {
            let delta = cb.mean() - ca.mean();
            // cheap lower bound δᵀS⁻¹δ ≥ |δ|² / tr S before factorising
            let tr = ca.cov().trace() + cb.cov().trace();
            if delta.norm_squared() / tr > gate {
                continue;
            }
            let chol = linalg::cholesky(&(ca.cov() + cb.cov()), "CI pairing covariance")?;
            let d = linalg::inv_quad_form(&chol, &delta);
            if d <= gate {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut fused = Vec::new();
    let (mut mass_a, mut mass_b, mut mass_f) = (0.0, 0.0, 0.0);
    for (_, i, j) in pairs {
        if used_a[i] || used_b[j] {
            continue;
        }
        used_a[i] = true;
        used_b[j] = true;
        let (ca, cb) = (&a.components()[i], &b.components()[j]);
        let ia = linalg::cholesky(ca.cov(), "CI input")?.inverse();
        let ib = linalg::cholesky(cb.cov(), "CI input")?.inverse();
        let info = &ia * omega + &ib * (1.0 - omega);
        let chol = linalg::cholesky(&info, "CI information")?;
        let mut cov = chol.inverse();
        linalg::symmetrise(&mut cov);
        let mean = &cov * (&ia * ca.mean() * omega + &ib * cb.mean() * (1.0 - omega));
        let lw = omega * ca.log_weight() + (1.0 - omega) * cb.log_weight();
        mass_a += ca.weight();
        mass_b += cb.weight();
        mass_f += lw.exp();
        let mut tags = ca.tags().clone();
        tags.extend(cb.tags().iter().copied());
        fused.push(GaussianComponent::from_parts(lw, mean, cov, tags));
    }
    if mass_f > 0.0 {
        let shift = omega * mass_a.ln() + (1.0 - omega) * mass_b.ln() - mass_f.ln();
        for c in &mut fused {
            c.add_log_weight(shift);
        }
    }
    let (la, lb) = (omega.ln(), (1.0 - omega).ln());
    let mut out = Vec::with_capacity(a.len() + b.len());
    for (c, _) in a.components().iter().zip(&used_a).filter(|(_, u)| !**u) {
        let mut c = c.clone();
        c.add_log_weight(la);
        out.push(c);
    }
    out.extend(fused);
    for (c, _) in b.components().iter().zip(&used_b).filter(|(_, u)| !**u) {
        let mut c = c.clone();
        c.add_log_weight(lb);
        out.push(c);
    }
    Ok(Intensity {
        dim: a.dim(),
        components: out,
    })
}

/// Fuses intensities with relative exponents `e_j` by successive CI with
/// `ω = s/(s + e)`, `s` the exponent accumulated so far; uniform exponents
/// give `ω_j = j/(j+1)`. Maintenance follows every step when enabled.
pub fn ci_fold(factors: &[(&Intensity, f64)], params: &PhdParams, maintain: bool) -> Result<Intensity> {
    let mut iter = factors.iter().filter(|(_, e)| *e > 0.0);
    let &(first, e0) = iter.next().ok_or_else(|| Error::invalid("nothing to fuse"))?;
    let mut acc = first.clone();
    let mut s = e0;
    for &(f, e) in iter {
        acc = ci_fuse(&acc, f, s / (s + e), params.merge_threshold)?;
        if maintain {
            acc = phd_maintain(&acc, params)?;
        }
        s += e;
    }
    Ok(acc)
}

pub fn phd_extract(f: &Intensity, params: &PhdParams, n: usize) -> Vec<Track> {
    tracker::select_disjoint(f.components(), params.confirmation_threshold(n), params.window)
}

#[derive(Debug, Clone)]
pub struct PhdSetup {
    pub motion: MotionModel,
    pub sensors: Vec<ObservationModel>,
    pub birth: Intensity,
    pub params: PhdParams,
    pub maintenance: bool,
}

impl PhdSetup {
    fn maintain(&self, f: Intensity) -> Result<Intensity> {
        if self.maintenance {
            phd_maintain(&f, &self.params)
        } else {
            Ok(f)
        }
    }

    fn check(&self, observations: &[Vec<Observation>]) -> Result<()> {
        if self.sensors.is_empty() || observations.len() != self.sensors.len() {
            return Err(Error::invalid("one observation set per sensor is required"));
        }
        self.params.validate()
    }
}

#[derive(Debug, Clone)]
pub struct PhdStepOutput {
    pub posterior: Intensity,
    pub tracks: Vec<Track>,
}

/// Every sensor updates the full predicted intensity; the posteriors are
/// CI-fused with uniform exponents.
pub fn phd_centralised_step(
    f: &Intensity,
    observations: &[Vec<Observation>],
    setup: &PhdSetup,
) -> Result<PhdStepOutput> {
    setup.check(observations)?;
    let predicted = phd_predict(f, &setup.motion, &setup.birth, &setup.params)?;
    let posteriors = setup
        .sensors
        .iter()
        .zip(observations)
        .map(|(s, ys)| setup.maintain(phd_update(&predicted, ys, s, &setup.params)?))
        .collect::<Result<Vec<_>>>()?;
    let factors: Vec<_> = posteriors.iter().map(|p| (p, 1.0)).collect();
    let posterior = setup.maintain(ci_fold(&factors, &setup.params, setup.maintenance)?)?;
    let tracks = phd_extract(&posterior, &setup.params, setup.sensors.len());
    Ok(PhdStepOutput { posterior, tracks })
}

/// Iterated-corrector multi-sensor PHD.
pub fn phd_sequential_step(
    f: &Intensity,
    observations: &[Vec<Observation>],
    setup: &PhdSetup,
) -> Result<PhdStepOutput> {
    setup.check(observations)?;
    let mut acc = phd_predict(f, &setup.motion, &setup.birth, &setup.params)?;
    for (s, ys) in setup.sensors.iter().zip(observations) {
        acc = setup.maintain(phd_update(&acc, ys, s, &setup.params)?)?;
    }
    let tracks = phd_extract(&acc, &setup.params, setup.sensors.len());
    Ok(PhdStepOutput {
        posterior: acc,
        tracks,
    })
}

#[derive(Debug, Clone)]
pub struct PhdDecentralisedOutput {
    pub nodes: Vec<Intensity>,
    pub tracks: Vec<Vec<Track>>,
    pub rounds: Vec<GossipRound>,
}

/// Undiscounted local prediction and update at every node, then `L` rounds
/// of CI gossip with Metropolis exponents.
pub fn phd_decentralised_step(
    nodes: &[Intensity],
    observations: &[Vec<Observation>],
    graph: &NetworkGraph,
    pi: &Matrix,
    gossip_rounds: usize,
    setup: &PhdSetup,
) -> Result<PhdDecentralisedOutput> {
    setup.check(observations)?;
    let n = setup.sensors.len();
    if nodes.len() != n || graph.n() != n || pi.shape() != (n, n) {
        return Err(Error::invalid("node states, graph, weights and sensors disagree on n"));
    }
    let mut current = (0..n)
        .map(|i| {
            let predicted = phd_predict(&nodes[i], &setup.motion, &setup.birth, &setup.params)?;
            setup.maintain(phd_update(&predicted, &observations[i], &setup.sensors[i], &setup.params)?)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rounds = Vec::new();
    for _ in 0..gossip_rounds {
        let weights = pi;
        let bytes = current.iter().map(intensity_bytes).sum();
        let next = (0..n)
            .map(|i| {
                let factors: Vec<_> = (0..n)
                    .filter(|&j| weights[(i, j)] > 0.0)
                    .map(|j| (&current[j], weights[(i, j)]))
                    .collect();
                setup.maintain(ci_fold(&factors, &setup.params, setup.maintenance)?)
            })
            .collect::<Result<Vec<_>>>()?;
        current = next;
        rounds.push(GossipRound {
            components: current.iter().map(Intensity::len).collect(),
            message_bytes: bytes,
        });
    }
    let tracks = current.iter().map(|f| phd_extract(f, &setup.params, n)).collect();
    Ok(PhdDecentralisedOutput {
        nodes: current,
        tracks,
        rounds,
    })
}

fn intensity_bytes(f: &Intensity) -> usize {
    crate::mixture::wire_bytes(f.components())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::ObsTag;
    use crate::linalg::Vector;
    use crate::tracker::FieldOfView;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> Vector {
        Vector::from_row_slice(x)
    }

    fn g1(w: f64, m: f64, p: f64) -> GaussianComponent {
        GaussianComponent::intensity(w, v(&[m]), Matrix::from_element(1, 1, p)).unwrap()
    }

    fn motion1() -> MotionModel {
        MotionModel::new(Matrix::identity(1, 1), Matrix::identity(1, 1)).unwrap()
    }

    fn sensor1() -> ObservationModel {
        ObservationModel::new(
            Matrix::identity(1, 1),
            Matrix::identity(1, 1),
            0.3,
            FieldOfView::new(vec![-100.0], vec![100.0]).unwrap(),
            v(&[0.0]),
        )
        .unwrap()
    }

    fn ob(i: u32, y: f64) -> Observation {
        Observation {
            tag: ObsTag::new(0, 1, i),
            value: v(&[y]),
        }
    }

    #[test]
    fn predict_examples() {
        let p = PhdParams::default();
        let birth = Intensity::new(1, vec![g1(0.1, 0.0, 100.0)]).unwrap();
        assert_eq!(phd_predict(&Intensity::empty(1), &motion1(), &birth, &p).unwrap(), birth);
        let one = Intensity::new(1, vec![g1(1.0, 0.0, 1.0)]).unwrap();
        let out = phd_predict(&one, &motion1(), &Intensity::empty(1), &p).unwrap();
        assert_relative_eq!(out.components()[0].weight(), 0.999, max_relative = 1e-14);
    }

    #[test]
    fn update_without_observations() {
        let p = PhdParams::default();
        let f = Intensity::new(1, vec![g1(1.0, 0.0, 1.0), g1(2.5, 3.0, 1.0)]).unwrap();
        let out = phd_update(&f, &[], &sensor1(), &p).unwrap();
        assert_relative_eq!(out.components()[0].weight(), 0.3, max_relative = 1e-14);
        assert_relative_eq!(out.components()[1].weight(), 0.75, max_relative = 1e-14);
    }

    #[test]
    fn clutter_free_detection_keeps_mass() {
        let p = PhdParams {
            clutter_intensity: 0.0,
            ..PhdParams::default()
        };
        let f = Intensity::new(1, vec![g1(0.8, 0.0, 1.0)]).unwrap();
        let out = phd_update(&f, &[ob(0, 0.2)], &sensor1(), &p).unwrap();
        assert_relative_eq!(out.components()[1].weight(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn two_component_scalar_oracle() {
        let p = PhdParams::default();
        let f = Intensity::new(1, vec![g1(0.6, 0.0, 2.0), g1(0.9, 1.5, 0.5)]).unwrap();
        let y = 0.7;
        let out = phd_update(&f, &[ob(0, y)], &sensor1(), &p).unwrap();
        let dens = |m: f64, s: f64| (-(y - m) * (y - m) / (2.0 * s)).exp() / (2.0 * std::f64::consts::PI * s).sqrt();
        let a = 0.7 * 0.6 * dens(0.0, 3.0);
        let b = 0.7 * 0.9 * dens(1.5, 1.5);
        let den = 1e-5 + a + b;
        assert_relative_eq!(out.components()[2].weight(), a / den, max_relative = 1e-12);
        assert_relative_eq!(out.components()[3].weight(), b / den, max_relative = 1e-12);
        assert_relative_eq!(out.components()[2].mean()[0], 0.7 * 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(out.components()[3].cov()[(0, 0)], 0.5 / 1.5, max_relative = 1e-12);
    }

    #[test]
    fn ci_examples() {
        let f = Intensity::new(1, vec![g1(0.7, 0.0, 1.0), g1(0.2, 50.0, 4.0)]).unwrap();
        let same = ci_fuse(&f, &f, 0.5, 8.0).unwrap();
        assert_eq!(same.len(), 2);
        for (x, y) in same.components().iter().zip(f.components()) {
            assert_relative_eq!(x.weight(), y.weight(), max_relative = 1e-12);
            assert_relative_eq!(x.mean(), y.mean(), epsilon = 1e-12);
            assert_relative_eq!(x.cov(), y.cov(), epsilon = 1e-12);
        }
        let a = Intensity::new(1, vec![g1(1.0, 0.0, 1.0)]).unwrap();
        let b = Intensity::new(1, vec![g1(1.0, 2.0, 1.0)]).unwrap();
        let c = ci_fuse(&a, &b, 0.5, 8.0).unwrap();
        assert_eq!(c.len(), 1);
        assert_relative_eq!(c.components()[0].mean()[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.components()[0].cov()[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ci_unpaired_pass_through() {
        let a = Intensity::new(1, vec![g1(1.0, 0.0, 1.0)]).unwrap();
        let b = Intensity::new(1, vec![g1(1.0, 100.0, 1.0)]).unwrap();
        let c = ci_fuse(&a, &b, 0.25, 8.0).unwrap();
        assert_eq!(c.len(), 2);
        assert_relative_eq!(c.components()[0].weight(), 0.25, max_relative = 1e-12);
        assert_relative_eq!(c.components()[1].weight(), 0.75, max_relative = 1e-12);
    }

    #[test]
    fn threshold_equivalence() {
        let p = PhdParams::default();
        let poss = crate::tracker::ExtractionConfig::new(0.1, 1, 10).unwrap().confirmation_threshold(0.3);
        assert_relative_eq!(p.confirmation_threshold(1), poss, max_relative = 1e-15);
    }
}
