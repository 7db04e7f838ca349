//! Periodic system with a stable limit cycle on the unit circle:
//!
//! ```text
//! x⁺ = A(x) x + h u + h w,   A(x) = [[1 + a0 h (1 - xᵀx),  b0 h],
//!                                    [-b0 h,  1 + a0 h (1 - xᵀx)]]
//! ```
//!
//! The phase advances by `b0 h` per step, so one revolution takes
//! `2π / (b0 h)` steps. The reference uses `b = 1`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::solver::FeasibleSet;
use crate::window::PredictorBasis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub a0: f64,
    pub b0: f64,
    pub h: f64,
    pub sigma: f64,
    pub x0: [f64; 2],
    pub reference_x0: [f64; 2],
    /// Symmetric control bound: `u ∈ [-u_max, u_max]²`.
    pub u_max: f64,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        Self {
            a0: 0.1,
            b0: 0.5 * PI,
            h: 1e-3,
            sigma: 1.0,
            x0: [1.0, 0.0],
            reference_x0: [1.0, 0.0],
            u_max: 0.6,
        }
    }
}

impl OscillatorParams {
    pub fn feasible_set(&self) -> Result<FeasibleSet> {
        FeasibleSet::cube(2, -self.u_max, self.u_max)
    }
}

/// `A(x) x` for off-diagonal rate `b`.
pub fn rotate(x: &DVector<f64>, a0: f64, b: f64, h: f64) -> DVector<f64> {
    let diag = 1.0 + a0 * h * (1.0 - x.norm_squared());
    DVector::from_column_slice(&[diag * x[0] + b * h * x[1], -b * h * x[0] + diag * x[1]])
}

pub fn oscillator_step(x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>, params: &OscillatorParams) -> DVector<f64> {
    rotate(x, params.a0, params.b0, params.h) + (u + w) * params.h
}

pub fn oscillator_reference_step(xbar: &DVector<f64>, params: &OscillatorParams) -> DVector<f64> {
    rotate(xbar, params.a0, 1.0, params.h)
}

/// Two predictors `A^(i)(x) x + h u` with `b_1 = 0`, `b_2 = 1`.
pub fn oscillator_basis(params: &OscillatorParams) -> PredictorBasis {
    let mut basis = PredictorBasis::new(2, 2);
    for b in [0.0, 1.0] {
        let (a0, h) = (params.a0, params.h);
        basis = basis.with_predictor(
            move |_, x: &DVector<f64>| rotate(x, a0, b, h),
            move |_, _| DMatrix::identity(2, 2) * h,
        );
    }
    basis
}

/// Weights reproducing the true dynamics: `(1 - b0, b0)`.
pub fn oscillator_alpha_star(params: &OscillatorParams) -> DVector<f64> {
    DVector::from_column_slice(&[1.0 - params.b0, params.b0])
}
