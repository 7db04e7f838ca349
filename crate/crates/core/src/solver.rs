//! Online accelerated projected gradient.
//!
//! Each environment step runs
//!
//! ```text
//! u⁺ = Π(y - ε ∇G_μ(t, y))
//! y⁺ = u⁺ + η (u⁺ - u)
//! ```
//!
//! with the momentum schedule `δ_{t+1} = (1 + sqrt(1 + 4δ_t²))/2`,
//! `η_t = (δ_{t-1} - 1)/δ_t`, seeded with `δ_{-1} = 1`. Only `u` is projected;
//! the lookahead `y` may leave the feasible set.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{inverse_lipschitz_step, SmoothObjective};

/// `δ_0 = (1 + √5)/2`, the first value produced from `δ_{-1} = 1`.
pub const DELTA_0: f64 = 1.618_033_988_749_895;

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Box { lo: DVector<f64>, hi: DVector<f64> },
    UnitSimplex { dim: usize },
}

impl FeasibleSet {
    pub fn boxed(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::InvalidSet(format!(
                "bounds of lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
            return Err(Error::InvalidSet(format!(
                "lower bound {} exceeds upper bound {} in coordinate {i}",
                lo[i], hi[i]
            )));
        }
        Ok(FeasibleSet::Box { lo, hi })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(DVector::from_element(dim, lo), DVector::from_element(dim, hi))
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSet("simplex of dimension 0".into()));
        }
        Ok(FeasibleSet::UnitSimplex { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lo, .. } => lo.len(),
            FeasibleSet::UnitSimplex { dim } => *dim,
        }
    }

    /// Euclidean projection.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        assert_eq!(v.len(), self.dim(), "projection of a vector of the wrong dimension");
        match self {
            FeasibleSet::Box { lo, hi } => v.zip_zip_map(lo, hi, |x, l, h| x.max(l).min(h)),
            FeasibleSet::UnitSimplex { .. } => project_simplex(v),
        }
    }

    pub fn contains(&self, u: &DVector<f64>, tol: f64) -> bool {
        if u.len() != self.dim() {
            return false;
        }
        match self {
            FeasibleSet::Box { lo, hi } => (0..u.len()).all(|i| u[i] >= lo[i] - tol && u[i] <= hi[i] + tol),
            FeasibleSet::UnitSimplex { .. } => u.iter().all(|&x| x >= -tol) && (u.sum() - 1.0).abs() <= tol,
        }
    }

    /// A canonical interior point: the box midpoint or the simplex barycenter.
    pub fn center(&self) -> DVector<f64> {
        match self {
            FeasibleSet::Box { lo, hi } => (lo + hi) / 2.0,
            FeasibleSet::UnitSimplex { dim } => DVector::from_element(*dim, 1.0 / *dim as f64),
        }
    }
}

/// Sort-and-threshold projection onto `{z >= 0, Σz = 1}`.
fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if s - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.map(|x| (x - tau).max(0.0))
}

/// Pure projection, `Π(v)`.
pub fn project(set: &FeasibleSet, v: &DVector<f64>) -> DVector<f64> {
    set.project(v)
}

/// One momentum update: `(δ_{t+1}, η_t)` from `(δ_{t-1}, δ_t)`.
pub fn momentum_next(delta_prev: f64, delta: f64) -> (f64, f64) {
    let next = (1.0 + (1.0 + 4.0 * delta * delta).sqrt()) / 2.0;
    (next, (delta_prev - 1.0) / delta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub u: DVector<f64>,
    pub y: DVector<f64>,
    /// `δ_{t-1}`.
    pub delta_prev: f64,
    /// `δ_t`.
    pub delta: f64,
    /// Number of updates applied so far.
    pub t: u64,
    /// Step size of the most recent update, 0 before the first.
    pub step_size: f64,
    /// Momentum weight of the most recent update.
    pub eta: f64,
}

impl SolverState {
    /// Starts at `Π(u0)` with `y = u`, `δ_{-1} = 1` and `δ_0 = (1 + √5)/2`.
    pub fn new(u0: &DVector<f64>, set: &FeasibleSet) -> Self {
        let u = set.project(u0);
        Self {
            y: u.clone(),
            u,
            delta_prev: 1.0,
            delta: DELTA_0,
            t: 0,
            step_size: 0.0,
            eta: 0.0,
        }
    }
}

/// One update from a gradient evaluated at `state.y`.
pub fn step(state: &SolverState, grad: &DVector<f64>, step_size: f64, set: &FeasibleSet) -> Result<SolverState> {
    if !(step_size > 0.0) || !step_size.is_finite() {
        return Err(Error::NonPositiveStep(step_size));
    }
    if grad.len() != state.y.len() {
        return Err(Error::DimensionMismatch(format!(
            "gradient of length {} for decision of length {}",
            grad.len(),
            state.y.len()
        )));
    }
    if !grad.iter().all(|g| g.is_finite()) {
        return Err(Error::InvalidInput("non-finite gradient".into()));
    }
    let u = set.project(&(&state.y - grad * step_size));
    let (delta_next, eta) = momentum_next(state.delta_prev, state.delta);
    let y = &u + (&u - &state.u) * eta;
    Ok(SolverState {
        u,
        y,
        delta_prev: state.delta,
        delta: delta_next,
        t: state.t + 1,
        step_size,
        eta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// `ε_t = 1 / L_t`.
    #[default]
    InverseLipschitz,
    /// `ε_t = min(ε_{t-1}, 1 / L_t)`.
    Monotone,
}

impl StepRule {
    pub fn step_size(self, previous: Option<f64>, lipschitz: f64) -> f64 {
        let fresh = inverse_lipschitz_step(lipschitz);
        match (self, previous) {
            (StepRule::Monotone, Some(prev)) => prev.min(fresh),
            _ => fresh,
        }
    }
}

impl std::str::FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse-lipschitz" => Ok(StepRule::InverseLipschitz),
            "monotone" => Ok(StepRule::Monotone),
            other => Err(Error::Config {
                field: "step_rule".into(),
                reason: format!("expected `inverse-lipschitz` or `monotone`, got `{other}`"),
            }),
        }
    }
}

/// One row of an online run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    pub u: DVector<f64>,
    pub step_size: f64,
    pub eta: f64,
    /// `G_μ(t, u_t)`; NaN for the initial row.
    pub objective: f64,
}

/// Online solver: one call to [`OnlineSolver::advance`] per environment step.
#[derive(Debug, Clone)]
pub struct OnlineSolver {
    set: FeasibleSet,
    rule: StepRule,
    inner_steps: usize,
    state: SolverState,
    last_step: Option<f64>,
}

impl OnlineSolver {
    pub fn new(u0: &DVector<f64>, set: FeasibleSet, rule: StepRule, inner_steps: usize) -> Result<Self> {
        if inner_steps == 0 {
            return Err(Error::Config {
                field: "inner_steps".into(),
                reason: "must be at least 1".into(),
            });
        }
        if u0.len() != set.dim() {
            return Err(Error::DimensionMismatch(format!(
                "initial decision of length {} for a set of dimension {}",
                u0.len(),
                set.dim()
            )));
        }
        let state = SolverState::new(u0, &set);
        Ok(Self {
            set,
            rule,
            inner_steps,
            state,
            last_step: None,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn decision(&self) -> &DVector<f64> {
        &self.state.u
    }

    /// Runs the configured number of updates on `objective` and returns the
    /// new decision's record. The momentum schedule is global and never reset.
    pub fn advance(&mut self, t: u64, objective: &dyn SmoothObjective) -> Result<StepRecord> {
        let step_size = self.rule.step_size(self.last_step, objective.lipschitz());
        for _ in 0..self.inner_steps {
            let grad = objective.value_grad(&self.state.y).grad;
            self.state = step(&self.state, &grad, step_size, &self.set)?;
        }
        self.last_step = Some(step_size);
        Ok(StepRecord {
            t,
            u: self.state.u.clone(),
            step_size,
            eta: self.state.eta,
            objective: objective.value(&self.state.u),
        })
    }
}

/// Runs `horizon` online steps. `assemble(t, state)` supplies the objective
/// at time `t = 1..=horizon`; the first record is the initial state at `t = 0`.
pub fn run_online<O, F>(
    mut assemble: F,
    u0: &DVector<f64>,
    set: FeasibleSet,
    horizon: u64,
    rule: StepRule,
    inner_steps: usize,
) -> Result<Vec<StepRecord>>
where
    O: SmoothObjective,
    F: FnMut(u64, &SolverState) -> Result<O>,
{
    let mut solver = OnlineSolver::new(u0, set, rule, inner_steps)?;
    let mut records = Vec::with_capacity(horizon as usize + 1);
    records.push(StepRecord {
        t: 0,
        u: solver.decision().clone(),
        step_size: 0.0,
        eta: 0.0,
        objective: f64::NAN,
    });
    for t in 1..=horizon {
        let objective = assemble(t, solver.state()).map_err(|e| e.at_step(t))?;
        records.push(solver.advance(t, &objective).map_err(|e| e.at_step(t))?);
    }
    Ok(records)
}
