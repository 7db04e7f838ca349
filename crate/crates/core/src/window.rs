//! Moving data window, control-affine predictor bases, and cached predictor
//! evaluations over the window.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::all_finite;

/// Moving window of observed states and applied controls.
///
/// At time `t` with `T = min(t, horizon)` the window holds the states
/// `x̂_{t-T}, ..., x̂_t` and the controls `u_{t-T}, ..., u_{t-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    t: u64,
    horizon: usize,
    states: VecDeque<DVector<f64>>,
    controls: VecDeque<DVector<f64>>,
}

impl ObservationWindow {
    /// An empty window at `t = 0` holding only the initial state.
    pub fn start(x0: DVector<f64>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("window horizon must be at least 1".into()));
        }
        Ok(Self {
            t: 0,
            horizon,
            states: VecDeque::from(vec![x0]),
            controls: VecDeque::new(),
        })
    }

    /// Builds a window from explicit data. `states` must have one more entry
    /// than `controls`, and `controls.len()` must equal `min(t, horizon)`.
    pub fn new(
        t: u64,
        horizon: usize,
        states: Vec<DVector<f64>>,
        controls: Vec<DVector<f64>>,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("window horizon must be at least 1".into()));
        }
        let len = controls.len();
        if len == 0 {
            return Err(Error::InvalidInput("window needs at least one transition".into()));
        }
        if states.len() != len + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} states for {} controls",
                states.len(),
                len
            )));
        }
        let expected = (t.min(horizon as u64)) as usize;
        if len != expected {
            return Err(Error::InvalidInput(format!(
                "window length {len} differs from min(t, horizon) = {expected}"
            )));
        }
        let n = states[0].len();
        let m = controls[0].len();
        if states.iter().any(|x| x.len() != n) || controls.iter().any(|u| u.len() != m) {
            return Err(Error::DimensionMismatch("ragged window data".into()));
        }
        Ok(Self {
            t,
            horizon,
            states: states.into(),
            controls: controls.into(),
        })
    }

    /// Records that `u` was applied at the current time and `x_next` was then
    /// observed; advances `t` and evicts the oldest transition once the window
    /// exceeds its horizon.
    pub fn push(&mut self, u: DVector<f64>, x_next: DVector<f64>) -> Result<()> {
        if x_next.len() != self.state_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} pushed into a window of dimension {}",
                x_next.len(),
                self.state_dim()
            )));
        }
        if let Some(first) = self.controls.front() {
            if first.len() != u.len() {
                return Err(Error::DimensionMismatch("control dimension changed".into()));
            }
        }
        self.controls.push_back(u);
        self.states.push_back(x_next);
        self.t += 1;
        if self.controls.len() > self.horizon {
            self.controls.pop_front();
            self.states.pop_front();
        }
        Ok(())
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of transitions `T`.
    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn control_dim(&self) -> Option<usize> {
        self.controls.front().map(|u| u.len())
    }

    /// Time index of the `j`-th transition.
    pub fn time_of(&self, j: usize) -> u64 {
        self.t - self.len() as u64 + j as u64
    }

    /// `x̂_k` for the `j`-th transition.
    pub fn state(&self, j: usize) -> &DVector<f64> {
        &self.states[j]
    }

    /// `x̂_{k+1}` for the `j`-th transition.
    pub fn next_state(&self, j: usize) -> &DVector<f64> {
        &self.states[j + 1]
    }

    pub fn control(&self, j: usize) -> &DVector<f64> {
        &self.controls[j]
    }

    /// The latest observation `x̂_t`.
    pub fn current_state(&self) -> &DVector<f64> {
        self.states.back().expect("window always holds a state")
    }

    pub(crate) fn require_data(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::InvalidInput("window has no transitions yet (T = 0)".into()))
        } else {
            Ok(())
        }
    }
}

pub type DriftFn = Arc<dyn Fn(u64, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type GainFn = Arc<dyn Fn(u64, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// One control-affine predictor `f(t, x, u) = f1(t, x) + f2(t, x) u`.
#[derive(Clone)]
pub struct Predictor {
    drift: DriftFn,
    gain: GainFn,
}

/// Set of `p` control-affine predictors sharing state dimension `n` and
/// control dimension `m`.
#[derive(Clone)]
pub struct PredictorBasis {
    n: usize,
    m: usize,
    predictors: Vec<Predictor>,
}

impl fmt::Debug for PredictorBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PredictorBasis")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("p", &self.predictors.len())
            .finish()
    }
}

impl PredictorBasis {
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            predictors: Vec::new(),
        }
    }

    pub fn with_predictor<F1, F2>(mut self, drift: F1, gain: F2) -> Self
    where
        F1: Fn(u64, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        F2: Fn(u64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.predictors.push(Predictor {
            drift: Arc::new(drift),
            gain: Arc::new(gain),
        });
        self
    }

    /// Adds a predictor that ignores the decision (`f2 = 0`).
    pub fn with_autonomous<F1>(self, drift: F1) -> Self
    where
        F1: Fn(u64, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        let (n, m) = (self.n, self.m);
        self.with_predictor(drift, move |_, _| DMatrix::zeros(n, m))
    }

    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn control_dim(&self) -> usize {
        self.m
    }

    pub fn drift(&self, i: usize, t: u64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let v = (self.predictors[i].drift)(t, x);
        if v.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "predictor {i} drift has dimension {}, expected {}",
                v.len(),
                self.n
            )));
        }
        if !all_finite(v.iter()) {
            return Err(Error::NonFinitePredictor { predictor: i, time: t });
        }
        Ok(v)
    }

    pub fn gain(&self, i: usize, t: u64, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g = (self.predictors[i].gain)(t, x);
        if g.shape() != (self.n, self.m) {
            return Err(Error::DimensionMismatch(format!(
                "predictor {i} gain has shape {:?}, expected {:?}",
                g.shape(),
                (self.n, self.m)
            )));
        }
        if !all_finite(g.iter()) {
            return Err(Error::NonFinitePredictor { predictor: i, time: t });
        }
        Ok(g)
    }

    /// `f^(i)(t, x, u)`.
    pub fn eval(&self, i: usize, t: u64, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "control of dimension {}, basis expects {}",
                u.len(),
                self.m
            )));
        }
        let f = self.drift(i, t, x)? + self.gain(i, t, x)? * u;
        if !all_finite(f.iter()) {
            return Err(Error::NonFinitePredictor { predictor: i, time: t });
        }
        Ok(f)
    }

    /// `Σ_i α_i f^(i)(t, x, u)`.
    pub fn combine(
        &self,
        alpha: &DVector<f64>,
        t: u64,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.n);
        for i in 0..self.len() {
            out += self.eval(i, t, x, u)? * alpha[i];
        }
        Ok(out)
    }
}

/// Predictor evaluations needed by every per-step computation:
/// `f_k^(i) = f^(i)(k, x̂_k, u_k)` over the window, plus `f1^(i)(t, x̂_t)` and
/// `f2^(i)(t, x̂_t)` at the current time.
///
/// The past evaluations never change once computed, so an online loop keeps
/// one of these alive and calls [`WindowFeatures::advance`] after each push.
#[derive(Debug, Clone)]
pub struct WindowFeatures {
    /// `past[j][i]` for the `j`-th transition of the window.
    pub past: VecDeque<Vec<DVector<f64>>>,
    pub drift_now: Vec<DVector<f64>>,
    pub gain_now: Vec<DMatrix<f64>>,
    t: u64,
}

impl WindowFeatures {
    pub fn evaluate(window: &ObservationWindow, basis: &PredictorBasis) -> Result<Self> {
        check_dims(window, basis)?;
        let mut past = VecDeque::with_capacity(window.len());
        for j in 0..window.len() {
            past.push_back(eval_all(basis, window.time_of(j), window.state(j), window.control(j))?);
        }
        let (drift_now, gain_now) = eval_current(basis, window)?;
        Ok(Self {
            past,
            drift_now,
            gain_now,
            t: window.t(),
        })
    }

    /// Brings the cache in line with `window` after one or more pushes.
    pub fn advance(&mut self, window: &ObservationWindow, basis: &PredictorBasis) -> Result<()> {
        let steps = window.t().saturating_sub(self.t) as usize;
        if steps == 0 && self.past.len() == window.len() {
            return Ok(());
        }
        if steps > window.len() || self.t > window.t() {
            *self = Self::evaluate(window, basis)?;
            return Ok(());
        }
        for j in window.len() - steps..window.len() {
            self.past
                .push_back(eval_all(basis, window.time_of(j), window.state(j), window.control(j))?);
        }
        while self.past.len() > window.len() {
            self.past.pop_front();
        }
        let (drift_now, gain_now) = eval_current(basis, window)?;
        self.drift_now = drift_now;
        self.gain_now = gain_now;
        self.t = window.t();
        Ok(())
    }

    pub fn predictors(&self) -> usize {
        self.drift_now.len()
    }

    pub fn len(&self) -> usize {
        self.past.len()
    }

    pub fn is_empty(&self) -> bool {
        self.past.is_empty()
    }

    /// `f^(i)(t, x̂_t, u)` for every predictor.
    pub fn current(&self, u: &DVector<f64>) -> Vec<DVector<f64>> {
        self.drift_now
            .iter()
            .zip(&self.gain_now)
            .map(|(f1, f2)| f1 + f2 * u)
            .collect()
    }
}

fn check_dims(window: &ObservationWindow, basis: &PredictorBasis) -> Result<()> {
    window.require_data()?;
    if basis.is_empty() {
        return Err(Error::InvalidInput("predictor basis is empty".into()));
    }
    if window.state_dim() != basis.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "window state dimension {} vs basis {}",
            window.state_dim(),
            basis.state_dim()
        )));
    }
    if window.control_dim() != Some(basis.control_dim()) {
        return Err(Error::DimensionMismatch(format!(
            "window control dimension {:?} vs basis {}",
            window.control_dim(),
            basis.control_dim()
        )));
    }
    Ok(())
}

fn eval_all(
    basis: &PredictorBasis,
    t: u64,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<Vec<DVector<f64>>> {
    (0..basis.len()).map(|i| basis.eval(i, t, x, u)).collect()
}

#[allow(clippy::type_complexity)]
fn eval_current(
    basis: &PredictorBasis,
    window: &ObservationWindow,
) -> Result<(Vec<DVector<f64>>, Vec<DMatrix<f64>>)> {
    let t = window.t();
    let x = window.current_state();
    let drift = (0..basis.len()).map(|i| basis.drift(i, t, x)).collect::<Result<_>>()?;
    let gain = (0..basis.len()).map(|i| basis.gain(i, t, x)).collect::<Result<_>>()?;
    Ok((drift, gain))
}
