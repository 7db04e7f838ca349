//! Learning the environment from the data window and building the adaptive
//! Wasserstein ambiguity set around the empirical next-state distribution.
//!
//! Given predictor evaluations `f_k^(i)` over the window, the weights `α`
//! come from a regularized least-squares fit
//!
//! ```text
//! A(i,j) = (1/T) Σ_k <f_k^(j), P_k f_k^(i)>      b(i) = (1/T) Σ_k <x̂_{k+1}, P_k f_k^(i)>
//! α = A⁺ b
//! ```
//!
//! and the ball radius `ε̂ = ε + γ H(u)` combines a sub-Gaussian
//! concentration term `ε`, an estimation-quality constant `γ = n c + θ` and
//! the drift `H(u)` between past predictions and the prediction at `(t, x̂_t, u)`.
//! The ball contains the true next-state distribution with probability at
//! least `ρ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::pseudo_inverse;
use crate::window::{ObservationWindow, PredictorBasis, WindowFeatures};

/// `|αᵀ1|` at or below this makes the empirical distribution undefined.
pub const ALPHA_SUM_TOLERANCE: f64 = 1e-12;

/// Parameters of the ambiguity-set construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningConfig {
    /// Confidence parameter, `0 < beta < 1`.
    pub beta: f64,
    /// Slack parameter, `theta >= 0`.
    pub theta: f64,
    /// Sub-Gaussian scale of the additive disturbance.
    pub sigma: f64,
    /// Bound on `‖P_k f_k^(i)‖`.
    pub d: f64,
    /// Concentration constant multiplying `T^(-1/max(n,2))`.
    pub a0: f64,
    /// Window horizon `T0`.
    pub horizon: usize,
}

impl Default for LearningConfig {
    fn default() -> Self {
        Self {
            beta: 0.05,
            theta: 1.0,
            sigma: 1.0,
            d: 1.0,
            a0: 1.0,
            horizon: 500,
        }
    }
}

impl LearningConfig {
    /// Lists every violated invariant as `(field, reason)`.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.beta > 0.0 && self.beta < 1.0) {
            out.push(("beta", format!("must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            out.push(("theta", format!("must be finite and >= 0, got {}", self.theta)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            out.push(("sigma", format!("must be > 0, got {}", self.sigma)));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            out.push(("d", format!("must be > 0, got {}", self.d)));
        }
        if !(self.a0 > 0.0 && self.a0.is_finite()) {
            out.push(("a0", format!("must be > 0, got {}", self.a0)));
        }
        if self.horizon == 0 {
            out.push(("horizon", "must be at least 1".to_string()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((field, reason)) => Err(Error::Config {
                field: field.to_string(),
                reason,
            }),
        }
    }
}

/// Gram matrix, right-hand side and the regularization scales `P_k = s_k I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub scales: Vec<f64>,
}

/// Builds `A`, `b` from a window by evaluating the basis on it.
pub fn build_gram(window: &ObservationWindow, basis: &PredictorBasis, d: f64) -> Result<Gram> {
    let features = WindowFeatures::evaluate(window, basis)?;
    gram_from_features(window, &features, d)
}

pub fn gram_from_features(window: &ObservationWindow, features: &WindowFeatures, d: f64) -> Result<Gram> {
    if !(d > 0.0) {
        return Err(Error::InvalidInput(format!("d must be positive, got {d}")));
    }
    check_aligned(window, features)?;
    let p = features.predictors();
    let t_len = window.len() as f64;
    let mut a = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    let mut scales = Vec::with_capacity(window.len());

    for (j, fk) in features.past.iter().enumerate() {
        let largest = fk.iter().map(|f| f.norm()).fold(0.0, f64::max);
        // P_k = s_k I with ‖P_k f_k^(i)‖ <= d.
        let s = if largest > 0.0 { (d / largest).min(1.0) } else { 1.0 };
        scales.push(s);
        let x_next = window.next_state(j);
        for i in 0..p {
            b[i] += s * x_next.dot(&fk[i]);
            for l in 0..=i {
                let v = s * fk[i].dot(&fk[l]);
                a[(i, l)] += v;
                if l != i {
                    a[(l, i)] += v;
                }
            }
        }
    }
    a /= t_len;
    b /= t_len;
    Ok(Gram { a, b, scales })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaEstimate {
    pub alpha: DVector<f64>,
    /// Smallest nonzero singular value of `A`; 0 when `A` vanishes.
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Set when `A ≡ 0`, in which case `alpha = 0` and `c` is undefined.
    pub degenerate: bool,
}

/// `α = A⁺ b`.
pub fn estimate_alpha(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<AlphaEstimate> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "Gram {:?} with rhs of length {}",
            a.shape(),
            b.len()
        )));
    }
    if !a.iter().chain(b.iter()).all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("Gram system has non-finite entries".into()));
    }
    let pinv = pseudo_inverse(a);
    Ok(AlphaEstimate {
        alpha: &pinv.matrix * b,
        sigma_min: pinv.sigma_min,
        sigma_max: pinv.sigma_max,
        degenerate: pinv.rank == 0,
    })
}

/// Support points `ξ̄_k` of the empirical next-state distribution, one per
/// transition in the window.
pub fn prediction_points(
    window: &ObservationWindow,
    basis: &PredictorBasis,
    alpha: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<Vec<DVector<f64>>> {
    let features = WindowFeatures::evaluate(window, basis)?;
    points_from_features(window, &features, alpha, u)
}

pub fn points_from_features(
    window: &ObservationWindow,
    features: &WindowFeatures,
    alpha: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<Vec<DVector<f64>>> {
    check_aligned(window, features)?;
    check_alpha(alpha, features.predictors())?;
    let alpha_sum = alpha.sum();
    if alpha_sum.abs() <= ALPHA_SUM_TOLERANCE {
        return Err(Error::DegenerateAlphaSum(alpha_sum.abs()));
    }
    let now = features.current(u);
    let mut points = Vec::with_capacity(window.len());
    for (j, fk) in features.past.iter().enumerate() {
        let scaled_next = window.next_state(j) / alpha_sum;
        let mut xi_bar = DVector::zeros(window.state_dim());
        for i in 0..alpha.len() {
            // ξ_k^(i) = f^(i)(t, x̂_t, u) + x̂_{k+1} / αᵀ1 - f_k^(i)
            let xi = &now[i] + &scaled_next - &fk[i];
            xi_bar.axpy(alpha[i], &xi, 1.0);
        }
        if !xi_bar.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite support point at time {}",
                window.time_of(j)
            )));
        }
        points.push(xi_bar);
    }
    Ok(points)
}

/// Concentration term `ε = sqrt(2 n σ² ln(1/β) / T) + a0 T^(-1/max(n,2))`.
pub fn concentration_radius(n: usize, sigma: f64, t_len: usize, beta: f64, a0: f64) -> f64 {
    let t = t_len as f64;
    let exponent = -1.0 / (n.max(2) as f64);
    (2.0 * n as f64 * sigma * sigma / t * (1.0 / beta).ln()).sqrt() + a0 * t.powf(exponent)
}

/// Confidence `ρ = (1-β)(1 - exp(-θ²T² / (2[(2T-1) c γ + n c²])))`.
pub fn confidence(beta: f64, theta: f64, t_len: usize, c: f64, gamma: f64, n: usize) -> f64 {
    confidence_with_gap(beta, theta, t_len, c, gamma, n)
}

/// The same confidence written with `(n c - γ)` in place of `θ`; equal to
/// [`confidence`] whenever `γ = n c + θ`.
pub fn confidence_from_gap(beta: f64, t_len: usize, c: f64, gamma: f64, n: usize) -> f64 {
    confidence_with_gap(beta, n as f64 * c - gamma, t_len, c, gamma, n)
}

fn confidence_with_gap(beta: f64, gap: f64, t_len: usize, c: f64, gamma: f64, n: usize) -> f64 {
    if gap == 0.0 {
        return 0.0;
    }
    let t = t_len as f64;
    let denom = 2.0 * ((2.0 * t - 1.0) * c * gamma + n as f64 * c * c);
    let tail = if denom > 0.0 {
        (-(gap * gap) * t * t / denom).exp()
    } else {
        0.0
    };
    (1.0 - beta) * (1.0 - tail)
}

/// Smallest `θ` whose confidence reaches `target`, found by bisection.
/// Returns `None` when `target >= 1 - β`.
pub fn theta_for_confidence(target: f64, beta: f64, t_len: usize, c: f64, n: usize) -> Option<f64> {
    if target >= 1.0 - beta {
        return None;
    }
    let rho = |theta: f64| confidence(beta, theta, t_len, c, n as f64 * c + theta, n);
    let mut hi = 1.0_f64.max(c);
    while rho(hi) < target {
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rho(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Drift `H(u) = (1/T) Σ_i Σ_k ‖f_k^(i) - f^(i)(t, x̂_t, u)‖`.
pub fn drift_term(features: &WindowFeatures, u: &DVector<f64>) -> f64 {
    if features.is_empty() {
        return 0.0;
    }
    let now = features.current(u);
    let total: f64 = features
        .past
        .iter()
        .flat_map(|fk| fk.iter().zip(&now).map(|(a, b)| (a - b).norm()))
        .sum();
    total / features.len() as f64
}

/// Fitted weights and the constants derived from the Gram spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedModel {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub alpha: DVector<f64>,
    pub sigma_min: f64,
    /// `c = σ e d sqrt(n p) / σ_min(A)`.
    pub c: f64,
    /// `γ = n c + θ`.
    pub gamma: f64,
}

impl LearnedModel {
    /// Fits `α` and derives `c`, `γ`. Fails with
    /// [`Error::RankDeficientGram`] when `A` has no nonzero singular value.
    pub fn fit(window: &ObservationWindow, features: &WindowFeatures, cfg: &LearningConfig) -> Result<Self> {
        Self::fit_inner(window, features, cfg, None)
    }

    /// Like [`LearnedModel::fit`] but substitutes `fallback_c` when `c` is
    /// undefined.
    pub fn fit_with_fallback(
        window: &ObservationWindow,
        features: &WindowFeatures,
        cfg: &LearningConfig,
        fallback_c: f64,
    ) -> Result<Self> {
        Self::fit_inner(window, features, cfg, Some(fallback_c))
    }

    fn fit_inner(
        window: &ObservationWindow,
        features: &WindowFeatures,
        cfg: &LearningConfig,
        fallback_c: Option<f64>,
    ) -> Result<Self> {
        cfg.validate()?;
        let gram = gram_from_features(window, features, cfg.d)?;
        let est = estimate_alpha(&gram.a, &gram.b)?;
        let n = window.state_dim();
        let p = features.predictors();
        let c = if est.sigma_min > 0.0 {
            concentration_constant(cfg.sigma, cfg.d, n, p, est.sigma_min)
        } else {
            fallback_c.ok_or(Error::RankDeficientGram)?
        };
        Ok(Self {
            a: gram.a,
            b: gram.b,
            alpha: est.alpha,
            sigma_min: est.sigma_min,
            c,
            gamma: n as f64 * c + cfg.theta,
        })
    }
}

/// `c = σ e d sqrt(n p) / σ_min`.
pub fn concentration_constant(sigma: f64, d: f64, n: usize, p: usize, sigma_min: f64) -> f64 {
    sigma * std::f64::consts::E * d * ((n * p) as f64).sqrt() / sigma_min
}

/// Wasserstein ball around the empirical distribution: uniform mass `1/T` on
/// each support point, radius `ε̂ = ε + γ H`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySet {
    pub support: Vec<DVector<f64>>,
    pub radius: f64,
    pub epsilon: f64,
    pub drift: f64,
    pub gamma: f64,
    pub rho: f64,
    /// Confidence recomputed from `(n c - γ)`; agrees with `rho`.
    pub rho_from_gap: f64,
}

impl AmbiguitySet {
    pub fn mass(&self) -> f64 {
        1.0 / self.support.len() as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        vec![self.mass(); self.support.len()]
    }
}

/// Radius, drift and confidence at decision `u` without the support points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSummary {
    pub radius: f64,
    pub epsilon: f64,
    pub drift: f64,
    pub rho: f64,
    pub rho_from_gap: f64,
}

pub fn radius_summary(
    features: &WindowFeatures,
    model: &LearnedModel,
    cfg: &LearningConfig,
    n: usize,
    u: &DVector<f64>,
) -> RadiusSummary {
    let t_len = features.len();
    let epsilon = concentration_radius(n, cfg.sigma, t_len, cfg.beta, cfg.a0);
    let drift = drift_term(features, u);
    RadiusSummary {
        radius: epsilon + model.gamma * drift,
        epsilon,
        drift,
        rho: confidence(cfg.beta, cfg.theta, t_len, model.c, model.gamma, n),
        rho_from_gap: confidence_from_gap(cfg.beta, t_len, model.c, model.gamma, n),
    }
}

pub fn build_ambiguity(
    window: &ObservationWindow,
    basis: &PredictorBasis,
    alpha: &DVector<f64>,
    model: &LearnedModel,
    cfg: &LearningConfig,
    u: &DVector<f64>,
) -> Result<AmbiguitySet> {
    let features = WindowFeatures::evaluate(window, basis)?;
    ambiguity_from_features(window, &features, alpha, model, cfg, u)
}

pub fn ambiguity_from_features(
    window: &ObservationWindow,
    features: &WindowFeatures,
    alpha: &DVector<f64>,
    model: &LearnedModel,
    cfg: &LearningConfig,
    u: &DVector<f64>,
) -> Result<AmbiguitySet> {
    cfg.validate()?;
    if !(model.sigma_min > 0.0) && model.c.is_nan() {
        return Err(Error::RankDeficientGram);
    }
    let support = points_from_features(window, features, alpha, u)?;
    let s = radius_summary(features, model, cfg, window.state_dim(), u);
    Ok(AmbiguitySet {
        support,
        radius: s.radius,
        epsilon: s.epsilon,
        drift: s.drift,
        gamma: model.gamma,
        rho: s.rho,
        rho_from_gap: s.rho_from_gap,
    })
}

fn check_aligned(window: &ObservationWindow, features: &WindowFeatures) -> Result<()> {
    window.require_data()?;
    if features.len() != window.len() {
        return Err(Error::DimensionMismatch(format!(
            "features cover {} transitions, window has {}",
            features.len(),
            window.len()
        )));
    }
    Ok(())
}

fn check_alpha(alpha: &DVector<f64>, p: usize) -> Result<()> {
    if alpha.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "alpha of length {} for {} predictors",
            alpha.len(),
            p
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn scalar_window(xs: &[f64], us: &[f64]) -> ObservationWindow {
        let t = us.len() as u64;
        ObservationWindow::new(
            t,
            us.len(),
            xs.iter().map(|&x| v(&[x])).collect(),
            us.iter().map(|&u| v(&[u])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_transition_gram_by_hand() {
        // f_0 = 2, d = 1 so P_0 = 0.5; x̂_1 = 6.
        let basis = PredictorBasis::new(1, 1).with_autonomous(|_, _| v(&[2.0]));
        let w = scalar_window(&[0.0, 6.0], &[0.0]);
        let g = build_gram(&w, &basis, 1.0).unwrap();
        assert_relative_eq!(g.scales[0], 0.5);
        assert_relative_eq!(g.a[(0, 0)], 2.0);
        assert_relative_eq!(g.b[0], 6.0);
        let est = estimate_alpha(&g.a, &g.b).unwrap();
        assert_relative_eq!(est.alpha[0], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_predictor_gives_zero_gram() {
        let basis = PredictorBasis::new(2, 1)
            .with_autonomous(|_, _| v(&[0.0, 0.0]))
            .with_autonomous(|_, _| v(&[0.0, 0.0]));
        let w = ObservationWindow::new(
            2,
            2,
            vec![v(&[1.0, 2.0]), v(&[3.0, 4.0]), v(&[5.0, 6.0])],
            vec![v(&[0.0]), v(&[1.0])],
        )
        .unwrap();
        let g = build_gram(&w, &basis, 1.0).unwrap();
        assert_eq!(g.a, DMatrix::zeros(2, 2));
        assert_eq!(g.b, DVector::zeros(2));
        let est = estimate_alpha(&g.a, &g.b).unwrap();
        assert!(est.degenerate);
        assert_eq!(est.alpha, DVector::zeros(2));
    }

    #[test]
    fn orthonormal_predictors_give_identity() {
        let basis = PredictorBasis::new(2, 1)
            .with_autonomous(|_, _| v(&[1.0, 0.0]))
            .with_autonomous(|_, _| v(&[0.0, 1.0]));
        let w = ObservationWindow::new(
            3,
            3,
            vec![v(&[0.0, 0.0]), v(&[0.3, 0.1]), v(&[0.2, 0.5]), v(&[0.4, 0.9])],
            vec![v(&[0.0]); 3],
        )
        .unwrap();
        let g = build_gram(&w, &basis, 10.0).unwrap();
        assert_relative_eq!(g.a, DMatrix::identity(2, 2), epsilon = 1e-15);
    }

    #[test]
    fn identity_gram_alpha() {
        let est = estimate_alpha(&DMatrix::identity(2, 2), &v(&[0.3, 0.7])).unwrap();
        assert_relative_eq!(est.alpha, v(&[0.3, 0.7]), epsilon = 1e-15);
    }

    #[test]
    fn regularization_bound_holds() {
        let basis = PredictorBasis::new(2, 1)
            .with_autonomous(|_, x| x * 3.0)
            .with_autonomous(|t, x| x.map(|c| c + t as f64));
        let xs: Vec<_> = (0..8).map(|k| v(&[k as f64, -(k as f64) * 0.5])).collect();
        let w = ObservationWindow::new(7, 7, xs, vec![v(&[0.0]); 7]).unwrap();
        let d = 0.8;
        let feats = WindowFeatures::evaluate(&w, &basis).unwrap();
        let g = gram_from_features(&w, &feats, d).unwrap();
        for (s, fk) in g.scales.iter().zip(&feats.past) {
            for f in fk {
                assert!(s * f.norm() <= d * (1.0 + 1e-15));
            }
        }
        assert_relative_eq!(g.a.clone(), g.a.transpose(), epsilon = 1e-12);
    }

    #[test]
    fn degenerate_alpha_sum_rejected() {
        let basis = PredictorBasis::new(1, 1)
            .with_autonomous(|_, x| x.clone())
            .with_autonomous(|_, x| x * 2.0);
        let w = scalar_window(&[1.0, 2.0], &[0.0]);
        let err = prediction_points(&w, &basis, &v(&[1.0, -1.0]), &v(&[0.0])).unwrap_err();
        assert!(matches!(err, Error::DegenerateAlphaSum(_)));
    }

    #[test]
    fn stationary_window_points_are_next_states() {
        // Time-invariant predictors, x̂_t = x̂_k and u = u_k: the f-terms cancel.
        let basis = PredictorBasis::new(1, 1)
            .with_predictor(|_, x| x * 0.5, |_, _| DMatrix::from_element(1, 1, 2.0))
            .with_predictor(|_, x| x * -1.0, |_, _| DMatrix::from_element(1, 1, 0.3));
        let w = ObservationWindow::new(
            2,
            2,
            vec![v(&[1.0]), v(&[1.0]), v(&[1.0])],
            vec![v(&[0.4]), v(&[0.4])],
        )
        .unwrap();
        let pts = prediction_points(&w, &basis, &v(&[0.25, 0.75]), &v(&[0.4])).unwrap();
        for (j, p) in pts.iter().enumerate() {
            assert_relative_eq!(p, w.next_state(j), epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_predictor_points_are_next_states() {
        let basis = PredictorBasis::new(1, 1).with_autonomous(|_, _| v(&[0.0]));
        let w = scalar_window(&[0.0, 1.5, -2.0], &[0.0, 0.0]);
        let pts = prediction_points(&w, &basis, &v(&[1.0]), &v(&[0.0])).unwrap();
        assert_eq!(pts, vec![v(&[1.5]), v(&[-2.0])]);
    }

    #[test]
    fn epsilon_formula_by_hand() {
        let e = concentration_radius(2, 1.0, 500, 0.05, 1.0);
        let expected = (0.008 * 20f64.ln()).sqrt() + 500f64.powf(-0.5);
        assert_relative_eq!(e, expected, epsilon = 1e-15);
        assert_relative_eq!(e, 0.1548 + 0.0447, epsilon = 1e-4);
    }

    #[test]
    fn zero_theta_gives_zero_confidence() {
        for &(t, c) in &[(1, 0.5), (10, 3.0), (500, 1e7)] {
            assert_eq!(confidence(0.05, 0.0, t, c, 2.0 * c, 2), 0.0);
        }
    }

    #[test]
    fn confidence_forms_agree() {
        let (n, c, theta) = (3, 0.7, 2.5);
        let gamma = n as f64 * c + theta;
        for t in [1, 5, 100] {
            let a = confidence(0.1, theta, t, c, gamma, n);
            let b = confidence_from_gap(0.1, t, c, gamma, n);
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn theta_search_reaches_target() {
        let (beta, t, c, n) = (0.05, 40, 1234.0, 2);
        let theta = theta_for_confidence(0.9, beta, t, c, n).unwrap();
        let rho = confidence(beta, theta, t, c, n as f64 * c + theta, n);
        assert!((0.9..0.9 + 1e-9).contains(&rho));
        assert!(theta_for_confidence(0.96, beta, t, c, n).is_none());
    }

    #[test]
    fn drift_vanishes_on_stationary_window() {
        let basis = PredictorBasis::new(1, 1)
            .with_predictor(|_, x| x * 2.0, |_, _| DMatrix::from_element(1, 1, 1.0));
        let w = ObservationWindow::new(
            2,
            2,
            vec![v(&[0.5]); 3],
            vec![v(&[0.1]), v(&[0.1])],
        )
        .unwrap();
        let feats = WindowFeatures::evaluate(&w, &basis).unwrap();
        assert_eq!(drift_term(&feats, &v(&[0.1])), 0.0);
        let cfg = LearningConfig {
            horizon: 2,
            ..Default::default()
        };
        let model = LearnedModel::fit(&w, &feats, &cfg).unwrap();
        let amb = ambiguity_from_features(&w, &feats, &model.alpha, &model, &cfg, &v(&[0.1])).unwrap();
        assert_eq!(amb.radius, amb.epsilon);
        assert_eq!(amb.weights().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn zero_gram_has_no_c() {
        let basis = PredictorBasis::new(1, 1).with_autonomous(|_, _| v(&[0.0]));
        let w = scalar_window(&[0.0, 1.0], &[0.0]);
        let feats = WindowFeatures::evaluate(&w, &basis).unwrap();
        let cfg = LearningConfig {
            horizon: 1,
            ..Default::default()
        };
        assert_eq!(LearnedModel::fit(&w, &feats, &cfg).unwrap_err(), Error::RankDeficientGram);
        let m = LearnedModel::fit_with_fallback(&w, &feats, &cfg, 0.25).unwrap();
        assert_eq!(m.c, 0.25);
        assert_eq!(m.gamma, 0.25 + cfg.theta);
    }

    #[test]
    fn config_violations_name_fields() {
        let cfg = LearningConfig {
            beta: 1.5,
            theta: -1.0,
            ..Default::default()
        };
        let fields: Vec<_> = cfg.violations().into_iter().map(|(f, _)| f).collect();
        assert_eq!(fields, vec!["beta", "theta"]);
        assert!(LearningConfig::default().violations().is_empty());
    }
}
