//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release --test acceptance`. The process exits
//! with status 0 after printing the report; set `ACCEPTANCE_STRICT=1` to
//! exit with status 1 when any criterion fails.

use std::time::Instant;

use possfuse::fusion::{
    centralised_step, correlated_bound, decentralised_step, matrix_power, metropolis_weights,
    sequential_multisensor_update, FusionConfig, FusionMode, FusionSetup, NetworkGraph,
};
use possfuse::gaussian::eval_gaussian;
use possfuse::metrics::{ospa, OspaParams};
use possfuse::scenario::{self, BirthEvent, GraphSpec, ScenarioConfig};
use possfuse::tracker::{
    self, BirthModel, ClutterModel, ExtractionConfig, FieldOfView, MaintenanceConfig, MotionModel, Observation,
    ObservationModel,
};
use possfuse::{fuse_product, GaussianComponent, Matrix, MaxMixture, ObsTag, Vector};
use possfuse_harness::experiment::results_csv;
use possfuse_harness::{run_all, ExperimentConfig, Filter, RunResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + stream)
}

fn random_spd(r: &mut ChaCha8Rng, d: usize, floor: f64) -> Matrix {
    let a = Matrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
    &a * a.transpose() + Matrix::identity(d, d) * floor
}

fn random_mixture(r: &mut ChaCha8Rng, d: usize, max_components: usize) -> MaxMixture {
    let m = r.random_range(1..=max_components);
    let comps = (0..m)
        .map(|_| {
            let mean = Vector::from_fn(d, |_, _| r.random_range(-5.0..5.0));
            GaussianComponent::new(r.random_range(0.01..=1.0), mean, random_spd(r, d, 0.5)).unwrap()
        })
        .collect();
    MaxMixture::new(d, comps).unwrap()
}

/// A state drawn from one of the mixture's components.
fn sample_near(r: &mut ChaCha8Rng, f: &MaxMixture) -> Vector {
    let c = &f.components()[r.random_range(0..f.len())];
    let l = c.cov().clone().cholesky().expect("SPD").l();
    let z = Vector::from_fn(c.dim(), |_, _| r.sample::<f64, _>(StandardNormal));
    c.mean() + l * z
}

/// `|a/b − 1|` from log values.
fn log_rel_err(la: f64, lb: f64) -> f64 {
    if la == lb {
        0.0
    } else {
        (la - lb).exp_m1().abs()
    }
}

fn max_rel_err(r: &mut ChaCha8Rng, a: &MaxMixture, b: &MaxMixture, points: usize) -> f64 {
    (0..points)
        .map(|_| {
            let x = sample_near(r, b);
            log_rel_err(a.log_eval(&x).unwrap(), b.log_eval(&x).unwrap())
        })
        .fold(0.0, f64::max)
}

// 1. F = F^w · F^{1−w} for random mixtures.
fn split_recombine() -> Outcome {
    const TOL: f64 = 1e-9;
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let f = random_mixture(&mut r, 4, 10);
        let w = r.random_range(0.01..0.99);
        let fused = fuse_product(&f.power(w).unwrap(), &f.power(1.0 - w).unwrap()).unwrap();
        worst = worst.max(max_rel_err(&mut r, &fused, &f, 1000));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= TOL && secs < 10.0,
        format!("max relative error {worst:.2e} (tol {TOL:.0e}) over 100 mixtures x 1000 states, {secs:.1} s (limit 10 s)"),
    )
}

fn one(x: f64) -> Matrix {
    Matrix::from_element(1, 1, x)
}

fn v1(x: f64) -> Vector {
    Vector::from_element(1, x)
}

/// `log(α N̄(x; μ, P))` for scalars.
fn log_g(log_w: f64, mean: f64, var: f64, x: f64) -> f64 {
    log_w - 0.5 * (x - mean) * (x - mean) / var
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

// 2. Closed-form 1-d prediction and update against dense-grid suprema.
fn grid_oracles() -> Outcome {
    const TOL: f64 = 1e-6;
    const STEP: f64 = 1e-3;
    let start = Instant::now();
    let mut r = rng(2);
    let (mut worst_predict, mut worst_update) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let m = r.random_range(1..=3);
        let comps: Vec<(f64, f64, f64)> = (0..m)
            .map(|_| (r.random_range(0.05f64..=1.0).ln(), r.random_range(-3.0..3.0), r.random_range(1.0..4.0)))
            .collect();
        let f = MaxMixture::new(
            1,
            comps
                .iter()
                .map(|&(lw, mu, p)| GaussianComponent::from_log_weight(lw, v1(mu), one(p)).unwrap())
                .collect(),
        )
        .unwrap();
        let sd_max = comps.iter().map(|c| c.2.sqrt()).fold(0.0, f64::max);
        let lo = comps.iter().map(|c| c.1).fold(f64::INFINITY, f64::min) - 10.0 * sd_max;
        let hi = comps.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max) + 10.0 * sd_max;
        let xs = grid(lo, hi, STEP);
        let prior_log = |x: f64| comps.iter().map(|&(lw, mu, p)| log_g(lw, mu, p, x)).fold(f64::NEG_INFINITY, f64::max);

        // prediction: sup_x' F(x') N̄(x; g x', q/w)
        let g = r.random_range(0.5..1.0);
        let q = r.random_range(1.0..4.0);
        let w = r.random_range(0.25..=1.0);
        let motion = MotionModel::new(one(g), one(q)).unwrap();
        let predicted = tracker::predict(&f, &motion, &BirthModel::none(1), w).unwrap();
        let prior_on_grid: Vec<f64> = xs.iter().map(|&x| prior_log(x)).collect();
        for _ in 0..100 {
            let &(_, mu, p) = &comps[r.random_range(0..m)];
            let s = (g * g * p + q / w).sqrt();
            let x = g * mu + r.random_range(-3.0..3.0) * s;
            let sup = xs
                .iter()
                .zip(&prior_on_grid)
                .map(|(&xp, &lp)| lp - 0.5 * (x - g * xp).powi(2) * w / q)
                .fold(f64::NEG_INFINITY, f64::max);
            let closed = predicted.eval(&v1(x)).unwrap();
            worst_predict = worst_predict.max((closed - sup.exp()).abs());
        }

        // update with one or two observations
        let obs_var = r.random_range(1.0..4.0);
        let alpha_df = r.random_range(0.05..0.95);
        let f_fa = r.random_range(1e-3..0.5);
        let sensor = ObservationModel::new(
            one(1.0),
            one(obs_var),
            alpha_df,
            FieldOfView::new(vec![-1e6], vec![1e6]).unwrap(),
            v1(0.0),
        )
        .unwrap();
        let ys: Vec<f64> = (0..r.random_range(1..=2)).map(|_| r.random_range(-4.0..4.0)).collect();
        let observations: Vec<Observation> = ys
            .iter()
            .enumerate()
            .map(|(i, &y)| Observation {
                tag: ObsTag::new(0, 1, i as u32),
                value: v1(y),
            })
            .collect();
        let posterior =
            tracker::update(&f, &observations, &sensor, &ClutterModel::new(f_fa).unwrap()).unwrap();
        let log_d: Vec<f64> = ys
            .iter()
            .map(|&y| {
                let sup = prior_on_grid
                    .iter()
                    .zip(&xs)
                    .map(|(&lp, &x)| lp - 0.5 * (y - x).powi(2) / obs_var)
                    .fold(f64::NEG_INFINITY, f64::max);
                sup.max(f_fa.ln())
            })
            .collect();
        for &x in xs.iter().step_by(97) {
            let lp = prior_log(x);
            let mut oracle = lp + alpha_df.ln();
            for (&y, &ld) in ys.iter().zip(&log_d) {
                oracle = oracle.max(lp - 0.5 * (y - x).powi(2) / obs_var - ld);
            }
            let closed = posterior.eval(&v1(x)).unwrap();
            worst_update = worst_update.max((closed - oracle.exp()).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_predict <= TOL && worst_update <= TOL && secs < 60.0,
        format!(
            "sup-norm error predict {worst_predict:.2e}, update {worst_update:.2e} (tol {TOL:.0e}) on 50 instances, {secs:.1} s (limit 60 s)"
        ),
    )
}

fn ncv_models() -> (MotionModel, ObservationModel) {
    let m = scenario::build_matrices(&ScenarioConfig::default());
    let motion = MotionModel::new(m.g, m.q).unwrap();
    let sensor = ObservationModel::new(
        m.h,
        m.r,
        1e-12,
        FieldOfView::new(vec![-1e9, -1e9], vec![1e9, 1e9]).unwrap(),
        Vector::zeros(4),
    )
    .unwrap();
    (motion, sensor)
}

// 3. One target, detection possibility 1 − 1e-12, negligible clutter:
// the surviving component follows the Kalman filter.
fn kalman_equivalence() -> Outcome {
    const TOL: f64 = 1e-9;
    let (motion, sensor) = ncv_models();
    let clutter = ClutterModel::new(f64::MIN_POSITIVE).unwrap();
    let (g, q, h, rn) = (
        motion.transition().clone(),
        motion.process_noise().clone(),
        sensor.matrix().clone(),
        sensor.noise().clone(),
    );
    let mut r = rng(3);
    let mut x_ref = Vector::from_row_slice(&[100.0, 5.0, 200.0, -3.0]);
    let mut p_ref = Matrix::from_diagonal(&Vector::from_row_slice(&[100.0, 25.0, 100.0, 25.0]));
    let mut f = MaxMixture::new(4, vec![GaussianComponent::new(1.0, x_ref.clone(), p_ref.clone()).unwrap()]).unwrap();
    let mut truth = x_ref.clone();
    let mut worst = 0.0f64;
    for k in 1..=20u32 {
        truth = &g * truth + Vector::from_fn(4, |i, _| if i % 2 == 1 { r.random_range(-0.5..0.5) } else { 0.0 });
        let y = &h * &truth + Vector::from_fn(2, |_, _| 5.0 * r.sample::<f64, _>(StandardNormal));

        x_ref = &g * &x_ref;
        p_ref = &g * &p_ref * g.transpose() + &q;
        let s = &h * &p_ref * h.transpose() + &rn;
        let k_gain = &p_ref * h.transpose() * s.try_inverse().unwrap();
        x_ref = &x_ref + &k_gain * (&y - &h * &x_ref);
        p_ref = (Matrix::identity(4, 4) - &k_gain * &h) * &p_ref;

        let predicted = tracker::predict(&f, &motion, &BirthModel::none(4), 1.0).unwrap();
        let obs = [Observation {
            tag: ObsTag::new(0, k, 0),
            value: y,
        }];
        f = tracker::update(&predicted, &obs, &sensor, &clutter).unwrap().truncate(1);
        let c = &f.components()[0];
        for (a, b) in c.mean().iter().zip(x_ref.iter()).chain(c.cov().iter().zip(p_ref.iter())) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    outcome(
        worst <= TOL,
        format!("max scaled deviation of mean/covariance from the Kalman filter {worst:.2e} (tol {TOL:.0e}) over 20 scans"),
    )
}

/// Small scenario with explicit sensor positions and its possibilistic setup.
fn small_setup(
    positions: Vec<[f64; 2]>,
    graph: GraphSpec,
    lambda_fa: f64,
    maintenance: Option<MaintenanceConfig>,
) -> (ScenarioConfig, FusionSetup) {
    let cfg = ScenarioConfig {
        n_sensors: positions.len(),
        sensor_positions: Some(positions),
        graph,
        lambda_fa,
        scans: 10,
        births: vec![BirthEvent { scan: 1, count: 2 }],
        seed: 17,
        ..ScenarioConfig::default()
    };
    let poss = scenario::translate_parameters(&cfg).unwrap();
    let setup = FusionSetup {
        motion: poss.motion,
        sensors: poss.sensors,
        clutter: poss.clutter,
        birth: poss.birth,
        augmentation: None,
        maintenance,
        extraction: ExtractionConfig::new(0.1, cfg.n_sensors, 10).unwrap(),
    };
    (cfg, setup)
}

fn between_scans(f: &MaxMixture, cap: usize) -> MaxMixture {
    tracker::maintain(f, 1e-4, 0.75, cap).unwrap()
}

// 4. Centralised fusion reproduces the sequential update (n = 2, no
// maintenance inside the step). F_fa = 1 and a detection-failure
// possibility that does not depend on the state.
fn lossless_centralised() -> Outcome {
    const TOL: f64 = 1e-9;
    let (cfg, mut setup) = small_setup(vec![[0.0, 0.0], [1000.0, 1000.0]], GraphSpec::Complete, 2.0, None);
    setup.clutter = ClutterModel::new(1.0).unwrap();
    let wide = FieldOfView::new(vec![-1e9, -1e9], vec![1e9, 1e9]).unwrap();
    setup.sensors = setup
        .sensors
        .iter()
        .map(|s| {
            ObservationModel::new(s.matrix().clone(), s.noise().clone(), s.alpha_df(), wide.clone(), s.sensor_offset().clone())
                .unwrap()
        })
        .collect();
    let run = scenario::generate(&cfg, 0).unwrap();
    let fusion = FusionConfig::uniform(FusionMode::Centralised, 2, 1);
    let mut r = rng(4);
    let mut prior = MaxMixture::empty(4);
    let mut worst = 0.0f64;
    for k in 1..=cfg.scans {
        let obs = run.observations_at(k);
        let central = centralised_step(&prior, &obs, &setup, &fusion).unwrap().posterior;
        let predicted = tracker::predict(&prior, &setup.motion, &setup.birth, 1.0).unwrap();
        let sequential = sequential_multisensor_update(&predicted, &obs, &setup.sensors, &setup.clutter).unwrap();
        worst = worst.max(max_rel_err(&mut r, &central, &sequential, 100));
        prior = between_scans(&sequential, 10);
    }
    outcome(
        worst <= TOL,
        format!("max relative error {worst:.2e} (tol {TOL:.0e}) at 1000 states over {} scans", cfg.scans),
    )
}

// 5. Metropolis weights on rings.
fn metropolis_convergence() -> Outcome {
    const SUM_TOL: f64 = 1e-12;
    const LIMIT_TOL: f64 = 1e-6;
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [4usize, 8] {
        let pi = metropolis_weights(&NetworkGraph::ring(n).unwrap()).unwrap();
        let asym = (&pi - pi.transpose()).amax();
        let rows = (0..n).map(|i| (pi.row(i).sum() - 1.0).abs()).fold(0.0, f64::max);
        let dev = matrix_power(&pi, 50).map(|v| (v - 1.0 / n as f64).abs()).max();
        let ok = asym == 0.0 && rows <= SUM_TOL && dev <= LIMIT_TOL;
        pass &= ok;
        parts.push(format!(
            "n={n}: asymmetry {asym:.1e}, row-sum error {rows:.1e}, max|Pi^50 - 1/n| {dev:.2e} (tol {LIMIT_TOL:.0e}) {}",
            if ok { "ok" } else { "FAILS" }
        ));
    }
    outcome(pass, parts.join("; "))
}

// 6. Decentralised nodes agree with centralised fusion after many rounds.
fn decentralised_agreement() -> Outcome {
    const TOL: f64 = 1e-6;
    const ROUNDS: usize = 50;
    let (cfg, mut setup) = small_setup(
        vec![[0.0, 0.0], [1000.0, 0.0], [500.0, 1000.0]],
        GraphSpec::Complete,
        1.0,
        None,
    );
    // The node birth term is discounted differently from a powered
    // centralised birth term, so the agreement is checked without births.
    setup.birth = BirthModel::none(4);
    let run = scenario::generate(&cfg, 0).unwrap();
    let graph = NetworkGraph::complete(3).unwrap();
    let pi = metropolis_weights(&graph).unwrap();
    let central_cfg = FusionConfig::uniform(FusionMode::Centralised, 3, 1);
    let node_cfg = FusionConfig::uniform(FusionMode::Decentralised, 3, ROUNDS);
    let mut r = rng(6);

    // Start from a tracked state: one component per initial target.
    let mut prior = MaxMixture::new(
        4,
        run.truth
            .targets
            .iter()
            .filter_map(|t| t.state_at(1))
            .map(|x| GaussianComponent::new(1.0, x.clone(), Matrix::identity(4, 4) * 25.0).unwrap())
            .collect(),
    )
    .unwrap();
    let mut worst = 0.0f64;
    let scans = 5;
    for k in 2..=scans + 1 {
        let obs = run.observations_at(k);
        let central = centralised_step(&prior, &obs, &setup, &central_cfg).unwrap().posterior;
        let nodes = vec![prior.power(1.0 / 3.0).unwrap(); 3];
        let out = decentralised_step(&nodes, &obs, &graph, &pi, &setup, &node_cfg).unwrap();
        for node in &out.nodes {
            worst = worst.max(max_rel_err(&mut r, &node.raise(3.0).unwrap(), &central, 200));
        }
        prior = between_scans(&central, 4);
    }
    outcome(
        worst <= TOL,
        format!("3-node complete graph, L={ROUNDS}: max relative error {worst:.2e} (tol {TOL:.0e}) over {scans} scans x 3 nodes x 200 states"),
    )
}

// 7. Correlated two-sensor likelihood against the independent bounds.
fn correlated_dominance() -> Outcome {
    let mut r = rng(7);
    let mut pass = true;
    let mut parts = Vec::new();
    let sigma2 = 1.0;
    for rho in [0.1, 0.5, 0.9] {
        let inflated = correlated_bound(sigma2, rho).unwrap();
        let joint_cov = Matrix::from_row_slice(2, 2, &[sigma2, rho, rho, sigma2]);
        let zero2 = Vector::zeros(2);
        let (mut dominated, mut tighter, mut strict) = (true, true, 0usize);
        for _ in 0..10_000 {
            let y = Vector::from_fn(2, |_, _| r.random_range(-4.0..4.0));
            let joint = eval_gaussian(&y, &zero2, &joint_cov).unwrap();
            let marg = |var: f64| {
                eval_gaussian(&v1(y[0]), &v1(0.0), &one(var)).unwrap() * eval_gaussian(&v1(y[1]), &v1(0.0), &one(var)).unwrap()
            };
            let product = marg(inflated);
            let half_power = marg(sigma2 / 0.5);
            dominated &= joint <= product;
            tighter &= product <= half_power;
            strict += usize::from(product < half_power);
        }
        let ok = dominated && tighter && strict > 0;
        pass &= ok;
        parts.push(format!(
            "rho={rho}: joint<=bound {dominated}, bound<=w=1/2 bound {tighter}, strict at {strict}/10000"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn desk_config(filter: Filter, mode: FusionMode, n: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.filter = filter;
    cfg.mode = mode;
    cfg.runs = 25;
    cfg.scenario.scans = 30;
    cfg.scenario.n_sensors = n;
    cfg
}

fn mean_precision(runs: &[RunResult]) -> f64 {
    let vals: Vec<f64> = runs.iter().filter_map(RunResult::mean_precision).collect();
    vals.iter().sum::<f64>() / vals.len().max(1) as f64
}

// 8. Desk-scale comparison with paired seeds.
fn desk_comparison() -> Outcome {
    const PAIRED_FRACTION: f64 = 0.8;
    let start = Instant::now();
    let out_dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&out_dir).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for mode in [FusionMode::Centralised, FusionMode::Decentralised] {
        let mut gaps = Vec::new();
        for n in [4usize, 8] {
            let mut results = Vec::new();
            for filter in [Filter::Possibilistic, Filter::Probabilistic] {
                let cfg = desk_config(filter, mode, n);
                let runs = run_all(&cfg).unwrap();
                let name = format!("{}-{}-n{n}.csv", filter.name(), possfuse_harness::config::mode_name(mode));
                std::fs::write(out_dir.join(name), results_csv(&cfg, &runs)).unwrap();
                results.push(runs);
            }
            let (poss, prob) = (&results[0], &results[1]);
            let wins = poss.iter().zip(prob).filter(|(a, b)| a.mean_ospa() < b.mean_ospa()).count();
            let fraction = wins as f64 / poss.len() as f64;
            let (pp, pq) = (mean_precision(poss), mean_precision(prob));
            let mean = |rs: &[RunResult]| rs.iter().map(RunResult::mean_ospa).sum::<f64>() / rs.len() as f64;
            let ok = fraction >= PAIRED_FRACTION && pp > pq;
            pass &= ok;
            gaps.push(pp - pq);
            parts.push(format!(
                "{} n={n}: OSPA poss {:.1} vs prob {:.1}, poss lower in {wins}/{} seeds; precision poss {pp:.2} vs prob {pq:.2} {}",
                possfuse_harness::config::mode_name(mode),
                mean(poss),
                mean(prob),
                poss.len(),
                if ok { "ok" } else { "FAILS" }
            ));
        }
        let grows = gaps[1] > gaps[0];
        pass &= grows;
        parts.push(format!(
            "{} precision gap n=4 {:.2}, n=8 {:.2} {}",
            possfuse_harness::config::mode_name(mode),
            gaps[0],
            gaps[1],
            if grows { "ok" } else { "FAILS" }
        ));
    }
    parts.push(format!("{:.0} s", start.elapsed().as_secs_f64()));
    outcome(pass, parts.join("; "))
}

fn random_set(r: &mut ChaCha8Rng) -> Vec<Vector> {
    (0..r.random_range(0..=5))
        .map(|_| Vector::from_fn(2, |_, _| r.random_range(0.0..300.0)))
        .collect()
}

// 9. OSPA is a metric; hand-checked values.
fn ospa_axioms() -> Outcome {
    const EPS: f64 = 1e-9;
    let prm = OspaParams::default();
    let mut r = rng(9);
    let (mut symmetric, mut identity, mut triangle) = (true, true, true);
    for _ in 0..1000 {
        let (x, y, z) = (random_set(&mut r), random_set(&mut r), random_set(&mut r));
        let dxy = ospa(&x, &y, &prm);
        symmetric &= (dxy - ospa(&y, &x, &prm)).abs() <= 1e-12 * dxy.max(1.0);
        identity &= ospa(&x, &x, &prm) == 0.0;
        // distinct random sets are at positive distance
        identity &= dxy > 0.0 || x.is_empty() && y.is_empty();
        triangle &= ospa(&x, &z, &prm) <= dxy + ospa(&y, &z, &prm) + EPS;
    }
    let p = |a: f64, b: f64| Vector::from_row_slice(&[a, b]);
    let examples = ospa(&[p(1.0, 2.0), p(30.0, -4.0)], &[p(1.0, 2.0), p(30.0, -4.0)], &prm) == 0.0
        && ospa(&[p(0.0, 0.0)], &[], &prm) == 100.0
        && ospa(&[], &[], &prm) == 0.0
        && ospa(&[p(0.0, 0.0)], &[p(3.0, 4.0)], &prm) == 5.0;
    outcome(
        symmetric && identity && triangle && examples,
        format!("1000 random triples: symmetry {symmetric}, identity {identity}, triangle {triangle}; hand-checked values {examples}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("split/recombine identity", split_recombine),
        ("grid-oracle predict and update", grid_oracles),
        ("Kalman equivalence", kalman_equivalence),
        ("lossless centralised fusion", lossless_centralised),
        ("Metropolis convergence", metropolis_convergence),
        ("decentralised/centralised agreement", decentralised_agreement),
        ("correlated-bound dominance", correlated_dominance),
        ("desk-scale comparison", desk_comparison),
        ("OSPA metric axioms", ospa_axioms),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} {}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{failed} criteria failed");
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
