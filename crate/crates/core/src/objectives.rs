//! Tractable robust objectives and their smoothed versions.
//!
//! Both problem classes reduce the worst case over the ambiguity ball to a
//! sample average over the support points plus a Lipschitz penalty times the
//! radius. Each data type stores the affine pieces of that reduction so the
//! smoothed value and gradient can be evaluated cheaply at any decision.
//!
//! **Control** (`Problem1Data`), loss `½‖u‖² + ‖x - x̄‖`:
//!
//! ```text
//! G_μ(u) = ½‖u‖² + (1/T) Σ_k F_μ(p_k + M u) + ε + (γ/T) Σ_i Σ_k F_μ(h_ki - B_i u)
//! ```
//!
//! **Allocation** (`Problem2Data`), loss `max(0, 1 - <u, x>/r0)`:
//!
//! ```text
//! G_μ(u) = (1/T) Σ_k F^S_μ(<u, p_k>/r0) + (q/r0) F_μ(u)
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::learning::AmbiguitySet;
use crate::linalg::{inf_norm, sigma_max};
use crate::smoothing::{huber, hinge, smoothed_hinge, SmoothingParams, ValueGrad};
use crate::window::{ObservationWindow, PredictorBasis, WindowFeatures};

/// Step sizes are `1 / max(L, LIPSCHITZ_FLOOR)`.
pub const LIPSCHITZ_FLOOR: f64 = 1e-6;

/// A smoothed convex objective with an analytic gradient.
pub trait SmoothObjective {
    fn dim(&self) -> usize;

    fn value_grad(&self, u: &DVector<f64>) -> ValueGrad;

    fn value(&self, u: &DVector<f64>) -> f64 {
        self.value_grad(u).value
    }

    /// The objective before smoothing.
    fn nonsmooth_value(&self, u: &DVector<f64>) -> f64;

    /// Upper bound on the Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;

    fn smoothing(&self) -> SmoothingParams;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem1Data {
    /// `M = Σ_i α_i f2^(i)(t, x̂_t)`.
    pub m: DMatrix<f64>,
    /// `p_k` at `u = 0`, reference offset included.
    pub p_const: Vec<DVector<f64>>,
    /// `h_const[k][i] = f_k^(i) - f1^(i)(t, x̂_t)`.
    pub h_const: Vec<Vec<DVector<f64>>>,
    /// `f2^(i)(t, x̂_t)`.
    pub h_lin: Vec<DMatrix<f64>>,
    pub epsilon: f64,
    pub gamma: f64,
    pub mu: f64,
    /// `σ_max(MᵀM)`.
    pub s0: f64,
    /// `σ_max(f2^(i)ᵀ f2^(i))`.
    pub s: Vec<f64>,
}

/// Builds the control objective from the window, using the concentration
/// term and `γ` of `ambiguity`.
pub fn assemble_problem1(
    window: &ObservationWindow,
    basis: &PredictorBasis,
    alpha: &DVector<f64>,
    ambiguity: &AmbiguitySet,
    reference: Option<&DVector<f64>>,
    mu: f64,
) -> Result<Problem1Data> {
    let features = WindowFeatures::evaluate(window, basis)?;
    Problem1Data::from_features(window, &features, alpha, ambiguity.epsilon, ambiguity.gamma, reference, mu)
}

impl Problem1Data {
    pub fn from_features(
        window: &ObservationWindow,
        features: &WindowFeatures,
        alpha: &DVector<f64>,
        epsilon: f64,
        gamma: f64,
        reference: Option<&DVector<f64>>,
        mu: f64,
    ) -> Result<Self> {
        check_common(window, features, alpha, mu)?;
        let n = window.state_dim();
        if let Some(r) = reference {
            if r.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "reference of dimension {}, state dimension {n}",
                    r.len()
                )));
            }
        }
        let p = features.predictors();
        let cols = features.gain_now[0].ncols();
        let mut m = DMatrix::zeros(n, cols);
        let mut drift_mix = DVector::zeros(n);
        for i in 0..p {
            m += &features.gain_now[i] * alpha[i];
            drift_mix.axpy(alpha[i], &features.drift_now[i], 1.0);
        }
        if let Some(r) = reference {
            drift_mix -= r;
        }

        let mut p_const = Vec::with_capacity(features.len());
        let mut h_const = Vec::with_capacity(features.len());
        for (j, fk) in features.past.iter().enumerate() {
            let mut pk = window.next_state(j) + &drift_mix;
            for i in 0..p {
                pk.axpy(-alpha[i], &fk[i], 1.0);
            }
            p_const.push(pk);
            h_const.push(fk.iter().zip(&features.drift_now).map(|(f, f1)| f - f1).collect());
        }

        let s0 = sigma_max(&m).powi(2);
        let s = features.gain_now.iter().map(|g| sigma_max(g).powi(2)).collect();
        Ok(Self {
            m,
            p_const,
            h_const,
            h_lin: features.gain_now.clone(),
            epsilon,
            gamma,
            mu,
            s0,
            s,
        })
    }

    fn horizon(&self) -> f64 {
        self.p_const.len() as f64
    }

    /// `(a, b) = ((1 + pγ)/2, μ + s0 + γ Σ_i s_i)`.
    pub fn smoothing_params(&self) -> SmoothingParams {
        SmoothingParams {
            mu: self.mu,
            a: (1.0 + self.h_lin.len() as f64 * self.gamma) / 2.0,
            b: self.mu + self.s0 + self.gamma * self.s.iter().sum::<f64>(),
        }
    }

    fn eval(&self, u: &DVector<f64>, smooth: bool) -> ValueGrad {
        let n = self.m.nrows();
        let t_len = self.horizon();
        let mu = self.mu;
        let mut scratch = DVector::zeros(n);

        let mu_u = &self.m * u;
        let mut tracking = 0.0;
        let mut tracking_grad = DVector::zeros(n);
        for pk in &self.p_const {
            scratch.copy_from(pk);
            scratch += &mu_u;
            let r = scratch.norm();
            if smooth {
                let (v, s) = huber(r, mu);
                tracking += v;
                tracking_grad.axpy(s, &scratch, 1.0);
            } else {
                tracking += r;
            }
        }

        let lin_u: Vec<DVector<f64>> = self.h_lin.iter().map(|b| b * u).collect();
        let mut drift = 0.0;
        let mut drift_grads = vec![DVector::zeros(n); self.h_lin.len()];
        for hk in &self.h_const {
            for (i, hki) in hk.iter().enumerate() {
                scratch.copy_from(hki);
                scratch -= &lin_u[i];
                let r = scratch.norm();
                if smooth {
                    let (v, s) = huber(r, mu);
                    drift += v;
                    drift_grads[i].axpy(s, &scratch, 1.0);
                } else {
                    drift += r;
                }
            }
        }

        let value = 0.5 * u.norm_squared() + tracking / t_len + self.epsilon + self.gamma * drift / t_len;
        let mut grad = u.clone();
        if smooth {
            grad += self.m.tr_mul(&tracking_grad) / t_len;
            for (b, g) in self.h_lin.iter().zip(&drift_grads) {
                grad -= b.tr_mul(g) * (self.gamma / t_len);
            }
        }
        ValueGrad { value, grad }
    }
}

impl SmoothObjective for Problem1Data {
    fn dim(&self) -> usize {
        self.m.ncols()
    }

    fn value_grad(&self, u: &DVector<f64>) -> ValueGrad {
        self.eval(u, true)
    }

    fn nonsmooth_value(&self, u: &DVector<f64>) -> f64 {
        self.eval(u, false).value
    }

    fn lipschitz(&self) -> f64 {
        self.smoothing_params().lipschitz()
    }

    fn smoothing(&self) -> SmoothingParams {
        self.smoothing_params()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem2Data {
    /// `p_k = x̂_{k+1} + Σ_i α_i (f1^(i)(t, x̂_t) - f1^(i)(k, x̂_k))`.
    pub points: Vec<DVector<f64>>,
    /// `q = ε + (γ/T) Σ_i Σ_k ‖f1^(i)(k, x̂_k) - f1^(i)(t, x̂_t)‖`.
    pub q: f64,
    pub r0: f64,
    pub mu: f64,
}

/// Builds the allocation objective. Every predictor must ignore the decision
/// at all window points and at the current state.
pub fn assemble_problem2(
    window: &ObservationWindow,
    basis: &PredictorBasis,
    alpha: &DVector<f64>,
    ambiguity: &AmbiguitySet,
    r0: f64,
    mu: f64,
) -> Result<Problem2Data> {
    let features = WindowFeatures::evaluate(window, basis)?;
    for j in 0..window.len() {
        for i in 0..basis.len() {
            if basis.gain(i, window.time_of(j), window.state(j))?.iter().any(|&g| g != 0.0) {
                return Err(Error::ControlDependentBasis(i));
            }
        }
    }
    Problem2Data::from_features(window, &features, alpha, ambiguity.epsilon, ambiguity.gamma, r0, mu)
}

impl Problem2Data {
    /// Checks only the gains at the current state; an online loop sees every
    /// window point as the current state once.
    pub fn from_features(
        window: &ObservationWindow,
        features: &WindowFeatures,
        alpha: &DVector<f64>,
        epsilon: f64,
        gamma: f64,
        r0: f64,
        mu: f64,
    ) -> Result<Self> {
        check_common(window, features, alpha, mu)?;
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidInput(format!("r0 must be positive, got {r0}")));
        }
        if let Some(i) = features.gain_now.iter().position(|g| g.iter().any(|&x| x != 0.0)) {
            return Err(Error::ControlDependentBasis(i));
        }
        let n = window.state_dim();
        let mut drift_sum = 0.0;
        let mut points = Vec::with_capacity(features.len());
        for (j, fk) in features.past.iter().enumerate() {
            let mut pk = window.next_state(j).clone();
            for (i, (f_past, f_now)) in fk.iter().zip(&features.drift_now).enumerate() {
                let mut dist2 = 0.0;
                for r in 0..n {
                    let diff = f_now[r] - f_past[r];
                    pk[r] += alpha[i] * diff;
                    dist2 += diff * diff;
                }
                drift_sum += dist2.sqrt();
            }
            points.push(pk);
        }
        Ok(Self {
            points,
            q: epsilon + gamma * drift_sum / features.len() as f64,
            r0,
            mu,
        })
    }

    fn horizon(&self) -> f64 {
        self.points.len() as f64
    }

    /// `a = (1 + q/r0)/2`; `b` makes `b/μ` the bound of [`Problem2Data::lipschitz_bound`].
    pub fn smoothing_params(&self) -> SmoothingParams {
        SmoothingParams {
            mu: self.mu,
            a: (1.0 + self.q / self.r0) / 2.0,
            b: self.lipschitz_bound() * self.mu,
        }
    }

    /// `(q/r0 + Σ_k ‖p_k‖² / (r0² T)) / μ`, a valid bound on the gradient's
    /// Lipschitz constant.
    pub fn lipschitz_bound(&self) -> f64 {
        let spread: f64 = self.points.iter().map(|p| p.norm_squared()).sum();
        (self.q / self.r0 + spread / (self.r0 * self.r0 * self.horizon())) / self.mu
    }

    /// `q/r0 + Σ_k ‖p_k‖²_∞ / (r0² T)`, the constant quoted for the allocation
    /// case study. It omits the `1/μ` factor and can undershoot the true
    /// constant.
    pub fn lipschitz_reported(&self) -> f64 {
        let spread: f64 = self.points.iter().map(|p| inf_norm(p).powi(2)).sum();
        self.q / self.r0 + spread / (self.r0 * self.r0 * self.horizon())
    }

    fn eval(&self, u: &DVector<f64>, smooth: bool) -> ValueGrad {
        let t_len = self.horizon();
        let mut shortfall = 0.0;
        let mut grad = DVector::zeros(u.len());
        for pk in &self.points {
            let s = u.dot(pk) / self.r0;
            if smooth {
                let (v, d) = smoothed_hinge(s, self.mu);
                shortfall += v;
                grad.axpy(d / (self.r0 * t_len), pk, 1.0);
            } else {
                shortfall += hinge(s);
            }
        }
        let weight = self.q / self.r0;
        let r = u.norm();
        let penalty = if smooth {
            let (v, scale) = huber(r, self.mu);
            grad.axpy(weight * scale, u, 1.0);
            v
        } else {
            r
        };
        ValueGrad {
            value: shortfall / t_len + weight * penalty,
            grad,
        }
    }
}

impl SmoothObjective for Problem2Data {
    fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    fn value_grad(&self, u: &DVector<f64>) -> ValueGrad {
        self.eval(u, true)
    }

    fn nonsmooth_value(&self, u: &DVector<f64>) -> f64 {
        self.eval(u, false).value
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz_bound()
    }

    fn smoothing(&self) -> SmoothingParams {
        self.smoothing_params()
    }
}

/// Static quadratic `½ (u - c)ᵀ Q (u - c)` with symmetric positive
/// semidefinite `Q`. Used for solver checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub q: DMatrix<f64>,
    pub center: DVector<f64>,
}

impl Quadratic {
    pub fn new(q: DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        if q.shape() != (center.len(), center.len()) {
            return Err(Error::DimensionMismatch(format!(
                "Hessian {:?} for a center of length {}",
                q.shape(),
                center.len()
            )));
        }
        Ok(Self { q, center })
    }

    /// `(scale/2) ‖u - c‖²`.
    pub fn isotropic(center: DVector<f64>, scale: f64) -> Self {
        let n = center.len();
        Self {
            q: DMatrix::identity(n, n) * scale,
            center,
        }
    }
}

impl SmoothObjective for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value_grad(&self, u: &DVector<f64>) -> ValueGrad {
        let d = u - &self.center;
        let grad = &self.q * &d;
        ValueGrad {
            value: 0.5 * d.dot(&grad),
            grad,
        }
    }

    fn nonsmooth_value(&self, u: &DVector<f64>) -> f64 {
        self.value(u)
    }

    fn lipschitz(&self) -> f64 {
        sigma_max(&self.q)
    }

    fn smoothing(&self) -> SmoothingParams {
        SmoothingParams {
            mu: 1.0,
            a: 0.0,
            b: self.lipschitz().max(LIPSCHITZ_FLOOR),
        }
    }
}

/// Gradient-Lipschitz constant of either objective.
pub fn lipschitz_grad_constant(objective: &dyn SmoothObjective) -> f64 {
    objective.lipschitz()
}

/// Step size `1 / max(L, LIPSCHITZ_FLOOR)`.
pub fn inverse_lipschitz_step(lipschitz: f64) -> f64 {
    1.0 / lipschitz.max(LIPSCHITZ_FLOOR)
}

fn check_common(
    window: &ObservationWindow,
    features: &WindowFeatures,
    alpha: &DVector<f64>,
    mu: f64,
) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidInput(format!("mu must be positive, got {mu}")));
    }
    if features.len() != window.len() || features.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "features cover {} transitions, window has {}",
            features.len(),
            window.len()
        )));
    }
    if alpha.len() != features.predictors() {
        return Err(Error::DimensionMismatch(format!(
            "alpha of length {} for {} predictors",
            alpha.len(),
            features.predictors()
        )));
    }
    Ok(())
}
