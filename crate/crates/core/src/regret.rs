//! Regret-bound diagnostics.
//!
//! With probability at least `ρ` the dynamic regret satisfies
//!
//! ```text
//! R_t <= 4 W_t / (t+2)² + T F_t + a μ + L(u*_t) ε̂
//! ```
//!
//! where `W_t` accumulates a rank-one storage function along the window,
//! `F_t = max_k |G*_{k+1} - G*_k| + L̄` measures how fast the optimum moves,
//! and `a μ`, `L(u*) ε̂` are the smoothing and ambiguity gaps. The optimal
//! decisions `u*_k` are not observable online, so everything here relies on
//! the offline [`oracle_ustar`] and is meant for simulation.

use std::collections::VecDeque;

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::objectives::SmoothObjective;
use crate::solver::{FeasibleSet, DELTA_0};

/// `V(z) = zᵀ H z` with `H = h hᵀ / (2 ε_prev)`, `h = (δ, 1-δ, δ) ⊗ I`.
/// `z` stacks three blocks of equal length.
pub fn storage_value(z: &DVector<f64>, delta_prev: f64, eps_prev: f64) -> Result<f64> {
    if !(eps_prev > 0.0) {
        return Err(Error::NonPositiveStep(eps_prev));
    }
    if !z.len().is_multiple_of(3) {
        return Err(Error::DimensionMismatch(format!(
            "stacked error of length {} is not three equal blocks",
            z.len()
        )));
    }
    let m = z.len() / 3;
    let d = delta_prev;
    let mut sq = 0.0;
    for i in 0..m {
        let c = d * z[i] + (1.0 - d) * z[m + i] + d * z[2 * m + i];
        sq += c * c;
    }
    Ok(sq / (2.0 * eps_prev))
}

/// `z_t = (u_t - u*_t, u_{t-1} - u*_{t-1}, u*_t - u*_{t-1})`.
pub fn stack_errors(
    u: &DVector<f64>,
    u_prev: &DVector<f64>,
    ustar: &DVector<f64>,
    ustar_prev: &DVector<f64>,
) -> DVector<f64> {
    let m = u.len();
    let mut z = DVector::zeros(3 * m);
    z.rows_mut(0, m).copy_from(&(u - ustar));
    z.rows_mut(m, m).copy_from(&(u_prev - ustar_prev));
    z.rows_mut(2 * m, m).copy_from(&(ustar - ustar_prev));
    z
}

/// `F_t = max_k |G*_{k+1} - G*_k| + L̄` over consecutive entries of `gstar`.
pub fn drift_bound(gstar: &[f64], l_bar: f64) -> Result<f64> {
    if gstar.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let swing = gstar.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    Ok(swing + l_bar)
}

/// `4 W / (t+2)² + T F_t + a μ + L(u*) ε̂`.
#[allow(clippy::too_many_arguments)]
pub fn regret_bound(
    gstar: &[f64],
    w: f64,
    a_mu: f64,
    l_ustar: f64,
    eps_hat: f64,
    l_bar: f64,
    horizon: usize,
    t: u64,
) -> Result<f64> {
    if t < 2 {
        return Err(Error::InvalidInput(format!("the bound needs t >= 2, got {t}")));
    }
    let f = drift_bound(gstar, l_bar)?;
    let tt = t as f64 + 2.0;
    Ok(4.0 * w / (tt * tt) + horizon as f64 * f + a_mu + l_ustar * eps_hat)
}

/// Monte-Carlo estimate of `E[ℓ(u, X)] - E[ℓ(u*, X)]` with paired draws.
/// Returns `(mean, standard error)`.
pub fn realized_regret<W, R: Rng>(
    u: &DVector<f64>,
    u_star: &DVector<f64>,
    mut sampler: impl FnMut(&mut R) -> W,
    loss: impl Fn(&DVector<f64>, &W) -> f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if n_samples < 100 {
        return Err(Error::InvalidInput(format!(
            "need at least 100 samples, got {n_samples}"
        )));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        let draw = sampler(rng);
        let diff = loss(u, &draw) - loss(u_star, &draw);
        sum += diff;
        sum_sq += diff * diff;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub u: DVector<f64>,
    pub value: f64,
    /// `‖u - Π(u - ∇G(u))‖`.
    pub residual: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before reaching `tol`.
    pub converged: bool,
}

/// Offline minimizer of a smooth objective over `set`: accelerated projected
/// gradient with backtracking and function-value restarts, stopped on the
/// fixed-point residual.
pub fn oracle_ustar(
    objective: &dyn SmoothObjective,
    set: &FeasibleSet,
    start: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> OracleSolution {
    let residual = |u: &DVector<f64>, g: &DVector<f64>| (u - set.project(&(u - g))).norm();
    let mut x = set.project(start);
    let mut fx = objective.value_grad(&x);
    let mut best = (x.clone(), fx.value, residual(&x, &fx.grad));
    if best.2 <= tol {
        return OracleSolution {
            u: best.0,
            value: best.1,
            residual: best.2,
            iterations: 0,
            converged: true,
        };
    }
    let mut y = x.clone();
    let mut theta = 1.0_f64;
    let mut lip = (objective.lipschitz() * 1e-3).max(1e-8);

    for iter in 1..=max_iter {
        let fy = objective.value_grad(&y);
        let (x_new, f_new) = loop {
            let cand = set.project(&(&y - &fy.grad / lip));
            let f_cand = objective.value_grad(&cand);
            // Local Lipschitz test on the gradients; it avoids the cancellation
            // of the function-value test near the optimum.
            let step = (&cand - &y).norm();
            if (&f_cand.grad - &fy.grad).norm() <= lip * step || lip > 1e300 {
                break (cand, f_cand);
            }
            lip *= 2.0;
        };
        let theta_new = (1.0 + (1.0 + 4.0 * theta * theta).sqrt()) / 2.0;
        if f_new.value > fx.value {
            // Restart the momentum from the last accepted point.
            theta = 1.0;
            y = x.clone();
        } else {
            y = &x_new + (&x_new - &x) * ((theta - 1.0) / theta_new);
            theta = theta_new;
            x = x_new;
            fx = f_new;
        }
        let res = residual(&x, &fx.grad);
        if fx.value < best.1 || (fx.value == best.1 && res < best.2) {
            best = (x.clone(), fx.value, res);
        }
        if res <= tol {
            return OracleSolution {
                u: x,
                value: fx.value,
                residual: res,
                iterations: iter,
                converged: true,
            };
        }
        lip *= 0.9;
    }
    OracleSolution {
        u: best.0,
        value: best.1,
        residual: best.2,
        iterations: max_iter,
        converged: false,
    }
}

/// Per-step quantities retained for the bound.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub t: u64,
    pub u: DVector<f64>,
    pub ustar: DVector<f64>,
    /// `G*_t = G_μ(t, u*_t)`.
    pub gstar: f64,
    /// `G_μ(t, u_t)`.
    pub value: f64,
    /// Step size that produced `u_t`.
    pub eps: f64,
    /// `δ_{t-1}` after producing `u_t`.
    pub delta_prev: f64,
    /// `|G_μ(t, u_{t-1}) - G_μ(t-1, u_{t-1})|`, the observed time drift.
    pub time_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretReport {
    pub t: u64,
    pub bound: f64,
    pub rho: f64,
    pub rho_from_gap: f64,
    pub realized: f64,
    pub realized_se: f64,
    pub w: f64,
    /// Moving-horizon upper bound `V_{t-T} + t² (G_μ(t-T, u_{t-T}) - G*_{t-T})`.
    pub w_upper: f64,
    pub f: f64,
    pub l_bar: f64,
    pub a_mu: f64,
    pub l_eps: f64,
}

/// Rolling store of [`StepDiagnostics`] that evaluates `W_t` and the bound.
///
/// The first decision is computed at `t = 1` (no objective exists at `t = 0`),
/// so `z_{t-T}` needs `t - T >= 2` and the horizon used is `T = min(t-2, T0)`.
#[derive(Debug, Clone)]
pub struct RegretTracker {
    horizon: usize,
    steps: VecDeque<StepDiagnostics>,
}

impl RegretTracker {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            steps: VecDeque::with_capacity(horizon + 3),
        }
    }

    pub fn push(&mut self, step: StepDiagnostics) -> Result<()> {
        if let Some(last) = self.steps.back() {
            if step.t != last.t + 1 {
                return Err(Error::InvalidInput(format!(
                    "diagnostics for step {} after step {}",
                    step.t, last.t
                )));
            }
        }
        self.steps.push_back(step);
        while self.steps.len() > self.horizon + 2 {
            self.steps.pop_front();
        }
        Ok(())
    }

    pub fn latest(&self) -> Option<&StepDiagnostics> {
        self.steps.back()
    }

    /// Effective horizon at the latest step, if a report is possible.
    pub fn effective_horizon(&self) -> Option<usize> {
        let t = self.steps.back()?.t;
        let first = self.steps.front()?.t;
        let span = (t - first) as usize;
        let h = span.saturating_sub(1).min(self.horizon).min(t.saturating_sub(2) as usize);
        (h >= 1).then_some(h)
    }

    fn at(&self, t: u64) -> &StepDiagnostics {
        let first = self.steps.front().expect("non-empty").t;
        &self.steps[(t - first) as usize]
    }

    fn storage(&self, k: u64) -> Result<f64> {
        let cur = self.at(k);
        let prev = self.at(k - 1);
        let z = stack_errors(&cur.u, &prev.u, &cur.ustar, &prev.ustar);
        storage_value(&z, cur.delta_prev, cur.eps)
    }

    /// `(W_t, moving-horizon upper bound, F_t, L̄)` at the latest step.
    pub fn storage_terms(&self) -> Result<(f64, f64, f64, f64)> {
        let horizon = self.effective_horizon().ok_or(Error::EmptyHistory)?;
        let t = self.steps.back().expect("non-empty").t;
        let start = t - horizon as u64;
        let v_start = self.storage(start)?;
        let v_now = self.storage(t)?;
        let mut correction = 0.0;
        for k in start..t {
            let ratio = self.at(k - 1).eps / self.at(k).eps;
            correction += (1.0 - ratio) * self.storage(k)?;
        }
        let s = self.at(start);
        let gap = (s.value - s.gstar).max(0.0);
        let lead = start as f64 - 1.0 + DELTA_0;
        let w = v_start - v_now - correction + lead * lead * gap;
        let w_upper = v_start + (t as f64).powi(2) * gap;

        let gstar: Vec<f64> = (start..=t).map(|k| self.at(k).gstar).collect();
        let l_bar = (start + 1..=t).map(|k| self.at(k).time_drift).fold(0.0, f64::max);
        let f = drift_bound(&gstar, l_bar)?;
        Ok((w, w_upper, f, l_bar))
    }

    /// Assembles the report at the latest step. `l_eps` is `L(u*_t) ε̂(u*_t)`.
    pub fn report(&self, a_mu: f64, l_eps: f64, rho: f64, rho_from_gap: f64, realized: (f64, f64)) -> Result<RegretReport> {
        let (w, w_upper, f, l_bar) = self.storage_terms()?;
        let t = self.steps.back().expect("non-empty").t;
        let horizon = self.effective_horizon().expect("checked above");
        let tt = t as f64 + 2.0;
        Ok(RegretReport {
            t,
            bound: 4.0 * w / (tt * tt) + horizon as f64 * f + a_mu + l_eps,
            rho,
            rho_from_gap,
            realized: realized.0,
            realized_se: realized.1,
            w,
            w_upper,
            f,
            l_bar,
            a_mu,
            l_eps,
        })
    }
}
