//! Closed-form Moreau envelopes of the non-smooth pieces of the objectives.
//!
//! For a convex `F` and `μ > 0` the envelope is
//! `F_μ(x) = min_z F(z) + ‖z - x‖² / (2μ)`. It is differentiable with a
//! `1/μ`-Lipschitz gradient and satisfies `F_μ <= F <= F_μ + a μ`.
//!
//! | function        | envelope                                  | `a`   |
//! |-----------------|-------------------------------------------|-------|
//! | `‖x‖₂`          | [`moreau_l2`] (Huber in the norm)         | 1/2   |
//! | `‖u‖₁`          | [`moreau_l1`] (componentwise Huber)       | m/2   |
//! | `max(0, 1 - s)` | [`smoothed_hinge`]                        | 1/2   |
//!
//! [`prox_oracle`] and friends minimize the defining problem numerically and
//! serve as an independent check of the closed forms.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Approximation and gradient-Lipschitz constants of a smoothed function:
/// `F_μ <= F <= F_μ + a μ` and `∇F_μ` is `b/μ`-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub mu: f64,
    pub a: f64,
    pub b: f64,
}

impl SmoothingParams {
    pub fn new(mu: f64, a: f64, b: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidInput(format!("mu must be positive, got {mu}")));
        }
        if !(a >= 0.0) || !(b > 0.0) {
            return Err(Error::InvalidInput(format!("need a >= 0 and b > 0, got ({a}, {b})")));
        }
        Ok(Self { mu, a, b })
    }

    pub fn l2(mu: f64) -> Result<Self> {
        Self::new(mu, 0.5, 1.0)
    }

    pub fn l1(mu: f64, m: usize) -> Result<Self> {
        Self::new(mu, m as f64 / 2.0, 1.0)
    }

    pub fn hinge(mu: f64) -> Result<Self> {
        Self::new(mu, 0.5, 1.0)
    }

    /// Worst-case gap `a μ` between the function and its envelope.
    pub fn gap(&self) -> f64 {
        self.a * self.mu
    }

    /// Lipschitz constant `b / μ` of the envelope gradient.
    pub fn lipschitz(&self) -> f64 {
        self.b / self.mu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrad {
    pub value: f64,
    pub grad: DVector<f64>,
}

/// Envelope of `|·|` at a point of norm `r`, returned as `(value, scale)`
/// with gradient `scale · x`. The quadratic branch owns the boundary `r = μ`.
#[inline]
pub fn huber(r: f64, mu: f64) -> (f64, f64) {
    if r <= mu {
        (r * r / (2.0 * mu), 1.0 / mu)
    } else {
        (r - mu / 2.0, 1.0 / r)
    }
}

/// Smoothed Euclidean norm.
pub fn moreau_l2(x: &DVector<f64>, mu: f64) -> ValueGrad {
    let (value, scale) = huber(x.norm(), mu);
    ValueGrad {
        value,
        grad: x * scale,
    }
}

/// Smoothed `ℓ1` norm, the sum of scalar envelopes.
pub fn moreau_l1(u: &DVector<f64>, mu: f64) -> ValueGrad {
    let mut value = 0.0;
    let grad = u.map(|ui| {
        let (v, s) = huber(ui.abs(), mu);
        value += v;
        s * ui
    });
    ValueGrad { value, grad }
}

/// Smoothed switch function `max(0, 1 - s)`, returned as `(value, derivative)`.
pub fn smoothed_hinge(s: f64, mu: f64) -> (f64, f64) {
    if s >= 1.0 {
        (0.0, 0.0)
    } else if s >= 1.0 - mu {
        let gap = 1.0 - s;
        (gap * gap / (2.0 * mu), -gap / mu)
    } else {
        (1.0 - s - mu / 2.0, -1.0)
    }
}

/// The non-smooth switch function.
pub fn hinge(s: f64) -> f64 {
    (1.0 - s).max(0.0)
}

const GOLDEN_ITERS: usize = 80;

/// Numerically evaluates `min_z F(z) + (z - x)² / (2μ)` for scalar `F`.
///
/// Scans `[x - 3μ, x + 3μ]` (widened to at least `±3·grid`) at spacing
/// `grid`, then refines the best cell by golden-section search.
pub fn prox_oracle(f: impl Fn(f64) -> f64, x: f64, mu: f64, grid: f64) -> f64 {
    let objective = |z: f64| f(z) + (z - x) * (z - x) / (2.0 * mu);
    minimize_scalar(&objective, x, (3.0 * mu).max(3.0 * grid), grid)
}

/// Oracle for a radially symmetric `F(z) = φ(‖z‖)`: the minimizer lies on
/// the line through the origin and `x`, so the search is one-dimensional.
pub fn prox_oracle_radial(phi: impl Fn(f64) -> f64, x: &DVector<f64>, mu: f64, grid: f64) -> f64 {
    let r = x.norm();
    let span = (3.0 * mu * (x.len() as f64).sqrt()).max(3.0 * grid);
    let objective = |s: f64| phi(s.abs()) + (s - r) * (s - r) / (2.0 * mu);
    minimize_scalar(&objective, r, span, grid)
}

/// Oracle for a separable `F(z) = Σ_i φ(z_i)`.
pub fn prox_oracle_separable(phi: impl Fn(f64) -> f64, x: &DVector<f64>, mu: f64, grid: f64) -> f64 {
    x.iter().map(|&xi| prox_oracle(&phi, xi, mu, grid)).sum()
}

fn minimize_scalar(objective: &impl Fn(f64) -> f64, center: f64, span: f64, grid: f64) -> f64 {
    let grid = grid.max(f64::EPSILON * (1.0 + center.abs()));
    let cells = (2.0 * span / grid).ceil() as usize;
    let lo = center - span;
    let mut best_z = lo;
    let mut best = objective(lo);
    for j in 1..=cells {
        let z = lo + j as f64 * grid;
        let v = objective(z);
        if v < best {
            best = v;
            best_z = z;
        }
    }
    let (mut a, mut b) = (best_z - grid, best_z + grid);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..GOLDEN_ITERS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = objective(d);
        }
    }
    best.min(fc).min(fd)
}
