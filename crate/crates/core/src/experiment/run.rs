use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, ScenarioKind};
use super::export::{RegretColumns, TrajectoryRecord, TrajectoryRow, Truncation};
use crate::error::{Error, Result};
use crate::learning::{radius_summary, LearnedModel, LearningConfig};
use crate::objectives::{Problem1Data, Problem2Data, SmoothObjective};
use crate::regret::{oracle_ustar, realized_regret, RegretTracker, StepDiagnostics};
use crate::scenarios::{
    allocation_basis, allocation_step, oscillator_basis, oscillator_reference_step, oscillator_step, rotate,
    sample_noise, AllocationParams, OscillatorParams, ALLOCATION_NOISE_MASK,
};
use crate::smoothing::{hinge, SmoothingParams, ValueGrad};
use crate::solver::{FeasibleSet, OnlineSolver};
use crate::window::{ObservationWindow, PredictorBasis, WindowFeatures};

const ORACLE_TOL: f64 = 1e-9;
const ORACLE_MAX_ITER: usize = 20_000;

/// Objective of either case study.
#[derive(Debug, Clone)]
pub enum Objective {
    Control(Problem1Data),
    Allocation(Problem2Data),
}

impl Objective {
    fn inner(&self) -> &dyn SmoothObjective {
        match self {
            Objective::Control(p) => p,
            Objective::Allocation(p) => p,
        }
    }
}

impl SmoothObjective for Objective {
    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn value_grad(&self, u: &DVector<f64>) -> ValueGrad {
        self.inner().value_grad(u)
    }

    fn value(&self, u: &DVector<f64>) -> f64 {
        self.inner().value(u)
    }

    fn nonsmooth_value(&self, u: &DVector<f64>) -> f64 {
        self.inner().nonsmooth_value(u)
    }

    fn lipschitz(&self) -> f64 {
        self.inner().lipschitz()
    }

    fn smoothing(&self) -> SmoothingParams {
        self.inner().smoothing()
    }
}

#[derive(Debug, Clone)]
enum World {
    Oscillator { params: OscillatorParams, reference: DVector<f64> },
    Allocation { params: AllocationParams },
}

impl World {
    fn new(config: &RunConfig, seed: u64) -> Result<Self> {
        Ok(match config.scenario {
            ScenarioKind::Oscillator => {
                let params = config.oscillator();
                let reference = DVector::from_column_slice(&params.reference_x0);
                World::Oscillator { params, reference }
            }
            ScenarioKind::Allocation => World::Allocation {
                params: config.allocation(seed)?,
            },
        })
    }

    fn basis(&self) -> PredictorBasis {
        match self {
            World::Oscillator { params, .. } => oscillator_basis(params),
            World::Allocation { params } => allocation_basis(params.h),
        }
    }

    fn feasible_set(&self) -> Result<FeasibleSet> {
        match self {
            World::Oscillator { params, .. } => params.feasible_set(),
            World::Allocation { params } => params.feasible_set(),
        }
    }

    fn initial_state(&self) -> DVector<f64> {
        match self {
            World::Oscillator { params, .. } => DVector::from_column_slice(&params.x0),
            World::Allocation { params } => DVector::from_column_slice(&params.x0),
        }
    }

    fn initial_decision(&self, set: &FeasibleSet) -> DVector<f64> {
        match self {
            World::Oscillator { .. } => DVector::zeros(2),
            World::Allocation { .. } => set.center(),
        }
    }

    fn noise(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        match self {
            World::Oscillator { params, .. } => sample_noise(rng, params.sigma, 2, None),
            World::Allocation { params } => sample_noise(rng, params.sigma, 3, Some(&ALLOCATION_NOISE_MASK)),
        }
    }

    fn step(&self, t: u64, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        match self {
            World::Oscillator { params, .. } => oscillator_step(x, u, w, params),
            World::Allocation { params } => allocation_step(x, w, t, params),
        }
    }

    /// `x̄_t`, for the oscillator.
    fn reference(&self) -> Option<&DVector<f64>> {
        match self {
            World::Oscillator { reference, .. } => Some(reference),
            World::Allocation { .. } => None,
        }
    }

    fn advance_reference(&mut self) {
        if let World::Oscillator { params, reference } = self {
            *reference = oscillator_reference_step(reference, params);
        }
    }

    fn reference_next(&self) -> Option<DVector<f64>> {
        match self {
            World::Oscillator { params, reference } => Some(oscillator_reference_step(reference, params)),
            World::Allocation { .. } => None,
        }
    }

    fn objective(
        &self,
        window: &ObservationWindow,
        features: &WindowFeatures,
        model: &LearnedModel,
        epsilon: f64,
        mu: f64,
    ) -> Result<Objective> {
        match self {
            World::Oscillator { .. } => {
                let target = self.reference_next();
                Problem1Data::from_features(window, features, &model.alpha, epsilon, model.gamma, target.as_ref(), mu)
                    .map(Objective::Control)
            }
            World::Allocation { params } => {
                Problem2Data::from_features(window, features, &model.alpha, epsilon, model.gamma, params.r0, mu)
                    .map(Objective::Allocation)
            }
        }
    }

    /// Lipschitz constant of the loss in the state, at decision `u`.
    fn loss_lipschitz(&self, u: &DVector<f64>) -> f64 {
        match self {
            World::Oscillator { .. } => 1.0,
            World::Allocation { params } => u.norm() / params.r0,
        }
    }

    /// Paired Monte-Carlo regret of `u` against `ustar` under the true
    /// next-state distribution from `x`.
    fn realized(
        &self,
        t: u64,
        x: &DVector<f64>,
        u: &DVector<f64>,
        ustar: &DVector<f64>,
        samples: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<(f64, f64)> {
        match self {
            World::Oscillator { params, .. } => {
                let drift = rotate(x, params.a0, params.b0, params.h);
                let target = self.reference_next().expect("oscillator has a reference");
                let h = params.h;
                realized_regret(
                    u,
                    ustar,
                    |r: &mut ChaCha8Rng| sample_noise(r, params.sigma, 2, None),
                    |v, w| 0.5 * v.norm_squared() + (&drift + (v + w) * h - &target).norm(),
                    samples,
                    rng,
                )
            }
            World::Allocation { params } => {
                let zero = DVector::zeros(3);
                let mean = allocation_step(x, &zero, t, params);
                let (h, r0) = (params.h, params.r0);
                realized_regret(
                    u,
                    ustar,
                    |r: &mut ChaCha8Rng| sample_noise(r, params.sigma, 3, Some(&ALLOCATION_NOISE_MASK)),
                    |v, w| hinge(v.dot(&(&mean + w * h)) / r0),
                    samples,
                    rng,
                )
            }
        }
    }
}

/// Aggregate metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub steps: usize,
    pub truncated: Option<Truncation>,
    pub final_alpha: Vec<f64>,
    pub mean_gamma: f64,
    pub mean_eps_hat: f64,
    pub mean_rho: f64,
    /// Mean `‖x_t - x̄_t‖²` over the final 20% of steps.
    pub tracking_mse: Option<f64>,
    /// The same with `u ≡ 0` under identical noise.
    pub baseline_mse: Option<f64>,
    /// Mean realized profit `<u_t, x_{t+1}>` after the first `t0` steps.
    pub mean_profit: Option<f64>,
    /// Fraction of post-warm-up steps with profit at least `r0 - 0.05`.
    pub profit_hold_fraction: Option<f64>,
    /// Fraction of post-warm-up steps whose largest return exceeds `r0`.
    pub high_return_fraction: Option<f64>,
    pub regret_steps: usize,
    /// Fraction of reported steps with realized regret at or below the bound.
    pub regret_dominance: Option<f64>,
}

/// Trajectory and summary of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: TrajectoryRecord,
    pub summary: RunSummary,
}

/// Runs the closed loop with `config.seed`.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    run_seeded(config, config.seed)
}

/// Runs `config.replications` independent runs with seeds `seed + i` in
/// parallel; the result is ordered by replication index.
pub fn run_replications(config: &RunConfig) -> Result<Vec<RunOutput>> {
    config.validate()?;
    (0..config.replications as u64)
        .into_par_iter()
        .map(|i| run_seeded(config, config.seed.wrapping_add(i)))
        .collect()
}

/// Runs the closed loop. Configuration problems are returned as errors; a
/// failure inside the loop ends the run early and is reported in
/// `record.truncated`.
pub fn run_seeded(config: &RunConfig, seed: u64) -> Result<RunOutput> {
    config.validate()?;
    let mut world = World::new(config, seed)?;
    let basis = world.basis();
    let set = world.feasible_set()?;
    let lcfg = config.learning();
    let mu = config.smoothing_mu();

    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut regret_rng = ChaCha8Rng::seed_from_u64(seed);
    regret_rng.set_stream(1);

    let x0 = world.initial_state();
    let u0 = world.initial_decision(&set);
    let mut solver = OnlineSolver::new(&u0, set.clone(), config.step_rule, config.inner_steps)?;
    let mut window = ObservationWindow::start(x0.clone(), config.t0)?;

    // t = 0: apply the initial decision.
    let w0 = world.noise(&mut noise_rng);
    let mut x = world.step(0, &x0, &u0, &w0);
    let mut baseline = world.step(0, &x0, &DVector::zeros(u0.len()), &w0);
    world.advance_reference();
    window.push(u0.clone(), x.clone())?;

    let mut features: Option<WindowFeatures> = None;
    let mut tracker = config.regret.then(|| RegretTracker::new(config.t0));
    let mut prev: Option<(DVector<f64>, f64)> = None;
    let mut ustar_warm = u0.clone();

    let mut rows = Vec::with_capacity(config.horizon as usize);
    let mut metrics = Metrics::default();
    let mut truncated = None;

    for t in 1..=config.horizon {
        let step = (|| -> Result<(TrajectoryRow, DVector<f64>)> {
            match features.as_mut() {
                Some(f) => f.advance(&window, &basis)?,
                None => features = Some(WindowFeatures::evaluate(&window, &basis)?),
            }
            let feats = features.as_ref().expect("just set");
            let model = fit(&window, feats, &lcfg, config.fallback_c)?;
            let n = window.state_dim();
            let epsilon = crate::learning::concentration_radius(n, lcfg.sigma, feats.len(), lcfg.beta, lcfg.a0);
            let objective = world.objective(&window, feats, &model, epsilon, mu)?;
            let rec = solver.advance(t, &objective)?;
            let u = rec.u.clone();
            let radius = radius_summary(feats, &model, &lcfg, n, &u);

            let regret = match tracker.as_mut() {
                None => None,
                Some(tr) => {
                    let sol = oracle_ustar(&objective, &set, &ustar_warm, ORACLE_TOL, ORACLE_MAX_ITER);
                    ustar_warm = sol.u.clone();
                    let time_drift = prev.as_ref().map_or(0.0, |(pu, pv)| (objective.value(pu) - pv).abs());
                    tr.push(StepDiagnostics {
                        t,
                        u: u.clone(),
                        ustar: sol.u.clone(),
                        gstar: sol.value,
                        value: rec.objective,
                        eps: rec.step_size,
                        delta_prev: solver.state().delta_prev,
                        time_drift,
                    })?;
                    if tr.effective_horizon().is_some() {
                        let at_star = radius_summary(feats, &model, &lcfg, n, &sol.u);
                        let l_eps = world.loss_lipschitz(&sol.u) * at_star.radius;
                        let realized =
                            world.realized(t, window.current_state(), &u, &sol.u, config.regret_samples, &mut regret_rng)?;
                        let report = tr.report(objective.smoothing().gap(), l_eps, radius.rho, radius.rho_from_gap, realized)?;
                        Some(RegretColumns::from(&report))
                    } else {
                        None
                    }
                }
            };
            prev = Some((u.clone(), rec.objective));

            let row = TrajectoryRow {
                t,
                x: window.current_state().iter().copied().collect(),
                u: u.iter().copied().collect(),
                alpha: model.alpha.iter().copied().collect(),
                gamma: model.gamma,
                eps_hat: radius.radius,
                rho: radius.rho,
                objective: rec.objective,
                regret,
            };
            Ok((row, u))
        })();

        let (row, u) = match step {
            Ok(v) => v,
            Err(e) => {
                let e = e.at_step(t);
                truncated = Some(Truncation::from_error(&e));
                break;
            }
        };

        let w = world.noise(&mut noise_rng);
        let x_next = world.step(t, &x, &u, &w);
        let baseline_next = world.step(t, &baseline, &DVector::zeros(u.len()), &w);
        metrics.observe(&world, config, t, &row, &x, &baseline, &x_next);
        rows.push(row);

        x = x_next;
        baseline = baseline_next;
        world.advance_reference();
        if let Err(e) = window.push(u, x.clone()) {
            truncated = Some(Truncation::from_error(&e.at_step(t)));
            break;
        }
    }

    let record = TrajectoryRecord {
        scenario: config.scenario.to_string(),
        state_dim: x0.len(),
        control_dim: u0.len(),
        predictors: basis.len(),
        regret: config.regret,
        rows,
        truncated,
    };
    let summary = metrics.finish(config, seed, &record);
    Ok(RunOutput { record, summary })
}

fn fit(window: &ObservationWindow, features: &WindowFeatures, cfg: &LearningConfig, fallback_c: Option<f64>) -> Result<LearnedModel> {
    match fallback_c {
        Some(c) => LearnedModel::fit_with_fallback(window, features, cfg, c),
        None => LearnedModel::fit(window, features, cfg),
    }
}

#[derive(Debug, Default)]
struct Metrics {
    tracking: Vec<f64>,
    baseline: Vec<f64>,
    profit: Vec<f64>,
    high_return: Vec<bool>,
}

impl Metrics {
    #[allow(clippy::too_many_arguments)]
    fn observe(
        &mut self,
        world: &World,
        config: &RunConfig,
        t: u64,
        row: &TrajectoryRow,
        x: &DVector<f64>,
        baseline: &DVector<f64>,
        x_next: &DVector<f64>,
    ) {
        match world {
            World::Oscillator { .. } => {
                let r = world.reference().expect("oscillator has a reference");
                self.tracking.push((x - r).norm_squared());
                self.baseline.push((baseline - r).norm_squared());
            }
            World::Allocation { .. } => {
                if t > config.t0 as u64 {
                    let u = DVector::from_column_slice(&row.u);
                    self.profit.push(u.dot(x_next));
                    self.high_return.push(x.max() > config.r0);
                }
            }
        }
    }

    fn finish(self, config: &RunConfig, seed: u64, record: &TrajectoryRecord) -> RunSummary {
        let rows = &record.rows;
        let mean = |v: &mut dyn Iterator<Item = f64>| {
            let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
            if n == 0 {
                f64::NAN
            } else {
                s / n as f64
            }
        };
        let tail_mean = |v: &[f64]| {
            if v.is_empty() {
                return None;
            }
            let start = v.len() - (v.len() / 5).max(1);
            Some(v[start..].iter().sum::<f64>() / (v.len() - start) as f64)
        };
        let fraction = |v: &mut dyn Iterator<Item = bool>| {
            let (k, n) = v.fold((0usize, 0usize), |(k, n), b| (k + b as usize, n + 1));
            (n > 0).then(|| k as f64 / n as f64)
        };
        let threshold = config.r0 - 0.05;
        let regret: Vec<&RegretColumns> = rows.iter().filter_map(|r| r.regret.as_ref()).collect();
        let is_alloc = config.scenario == ScenarioKind::Allocation;

        RunSummary {
            scenario: config.scenario.to_string(),
            seed,
            steps: rows.len(),
            truncated: record.truncated.clone(),
            final_alpha: rows.last().map(|r| r.alpha.clone()).unwrap_or_default(),
            mean_gamma: mean(&mut rows.iter().map(|r| r.gamma)),
            mean_eps_hat: mean(&mut rows.iter().map(|r| r.eps_hat)),
            mean_rho: mean(&mut rows.iter().map(|r| r.rho)),
            tracking_mse: tail_mean(&self.tracking),
            baseline_mse: tail_mean(&self.baseline),
            mean_profit: (is_alloc && !self.profit.is_empty()).then(|| mean(&mut self.profit.iter().copied())),
            profit_hold_fraction: fraction(&mut self.profit.iter().map(|&p| p >= threshold)),
            high_return_fraction: fraction(&mut self.high_return.iter().copied()),
            regret_steps: regret.len(),
            regret_dominance: fraction(&mut regret.iter().map(|r| r.realized <= r.bound)),
        }
    }
}

/// Maps a module error to the `(step, kind, message)` triple of an error record.
pub fn error_record(e: &Error) -> serde_json::Value {
    serde_json::json!({
        "error": e.kind(),
        "step": e.step(),
        "message": e.to_string(),
    })
}
