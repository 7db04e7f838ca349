//! Three-asset return process with a value-preserving third asset:
//!
//! ```text
//! x⁺ = x + h A(t) + h w,   A_3 = w_3 = 0,   x_3 ≡ 1
//! ```
//!
//! `A(t)` is piecewise constant. The default schedule draws a random target
//! level for each of the first two returns at every switch and sets the drift
//! that reaches it by the next switch, so the noiseless returns follow a
//! piecewise-linear path between levels in `[level_lo, level_hi]`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::FeasibleSet;
use crate::window::PredictorBasis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSchedule {
    /// Steps between switches.
    pub interval: u64,
    /// `A(t)` on each segment; the last one persists.
    pub segments: Vec<[f64; 2]>,
}

impl DriftSchedule {
    pub fn constant(a: [f64; 2]) -> Self {
        Self {
            interval: u64::MAX,
            segments: vec![a],
        }
    }

    /// Random levels in `[lo, hi]` reached linearly from `start`, one per
    /// segment, covering `horizon` steps.
    pub fn random_levels(seed: u64, interval: u64, lo: f64, hi: f64, start: [f64; 2], h: f64, horizon: u64) -> Result<Self> {
        if interval == 0 {
            return Err(Error::Config {
                field: "switch_interval".into(),
                reason: "must be at least 1".into(),
            });
        }
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config {
                field: "level_lo".into(),
                reason: format!("need finite level_lo <= level_hi, got [{lo}, {hi}]"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = horizon.div_ceil(interval).max(1);
        let span = h * interval as f64;
        let mut level = start;
        let mut segments = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let mut a = [0.0; 2];
            for (c, slot) in a.iter_mut().enumerate() {
                let target = if lo == hi { lo } else { rng.random_range(lo..=hi) };
                *slot = (target - level[c]) / span;
                level[c] = target;
            }
            segments.push(a);
        }
        Ok(Self { interval, segments })
    }

    /// `A(t)` as a three-vector with zero third component.
    pub fn drift_at(&self, t: u64) -> DVector<f64> {
        let j = ((t / self.interval) as usize).min(self.segments.len() - 1);
        let a = self.segments[j];
        DVector::from_column_slice(&[a[0], a[1], 0.0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationParams {
    pub h: f64,
    pub sigma: f64,
    pub r0: f64,
    pub x0: [f64; 3],
    pub schedule: DriftSchedule,
}

impl AllocationParams {
    pub fn feasible_set(&self) -> Result<FeasibleSet> {
        FeasibleSet::simplex(3)
    }
}

/// Noise mask: the third asset is deterministic.
pub const ALLOCATION_NOISE_MASK: [bool; 3] = [false, false, true];

pub fn allocation_step(x: &DVector<f64>, w: &DVector<f64>, t: u64, params: &AllocationParams) -> DVector<f64> {
    let mut next = x + (params.schedule.drift_at(t) + w) * params.h;
    next[2] = x[2];
    next
}

/// `f1 = x`, `f2 = x + 0.1 h e1`, `f3 = x + 0.1 h e2`, none depending on `u`.
pub fn allocation_basis(h: f64) -> PredictorBasis {
    let shift = 0.1 * h;
    PredictorBasis::new(3, 3)
        .with_autonomous(|_, x: &DVector<f64>| x.clone())
        .with_autonomous(move |_, x: &DVector<f64>| {
            let mut y = x.clone();
            y[0] += shift;
            y
        })
        .with_autonomous(move |_, x: &DVector<f64>| {
            let mut y = x.clone();
            y[1] += shift;
            y
        })
}

/// Weights reproducing a drift `A = (a1, a2, 0)`: `(1 - 10a1 - 10a2, 10a1, 10a2)`.
pub fn allocation_alpha_star(a: &DVector<f64>) -> DVector<f64> {
    let (a2, a3) = (10.0 * a[0], 10.0 * a[1]);
    DVector::from_column_slice(&[1.0 - a2 - a3, a2, a3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn params(a: [f64; 2]) -> AllocationParams {
        AllocationParams {
            h: 1e-3,
            sigma: 0.1,
            r0: 1.3,
            x0: [1.0, 1.0, 1.0],
            schedule: DriftSchedule::constant(a),
        }
    }

    #[test]
    fn no_drift_no_noise_is_still() {
        let p = params([0.0, 0.0]);
        let x = v(&[0.7, 1.4, 1.0]);
        assert_eq!(allocation_step(&x, &v(&[0.0; 3]), 5, &p), x);
    }

    #[test]
    fn substitution_example() {
        let p = params([2.0, -1.0]);
        let next = allocation_step(&v(&[1.0, 1.0, 1.0]), &v(&[0.0; 3]), 0, &p);
        assert_relative_eq!(next, v(&[1.002, 0.999, 1.0]), epsilon = 1e-15);
    }

    #[test]
    fn third_asset_is_preserved() {
        let p = params([0.5, 0.5]);
        let mut x = v(&[1.0, 1.0, 1.0]);
        for t in 0..1000 {
            x = allocation_step(&x, &v(&[0.3, -0.2, 5.0]), t, &p);
        }
        assert_eq!(x[2], 1.0);
    }

    #[test]
    fn basis_span_recovers_drift() {
        let basis = allocation_basis(1e-3);
        let a = v(&[0.4, -0.7, 0.0]);
        let alpha = allocation_alpha_star(&a);
        let x = v(&[1.2, 0.8, 1.0]);
        let u = v(&[0.2, 0.3, 0.5]);
        let want = &x + &a * 1e-3;
        assert_relative_eq!(basis.combine(&alpha, 0, &x, &u).unwrap(), want, epsilon = 1e-14);
        assert_eq!(basis.gain(1, 0, &x).unwrap(), nalgebra::DMatrix::zeros(3, 3));
    }

    #[test]
    fn random_levels_hit_targets() {
        let s = DriftSchedule::random_levels(4, 100, 0.5, 2.0, [1.0, 1.0], 1e-3, 1000).unwrap();
        assert_eq!(s.segments.len(), 10);
        let mut level = [1.0, 1.0];
        for seg in &s.segments {
            for c in 0..2 {
                level[c] += seg[c] * 1e-3 * 100.0;
                assert!((0.5 - 1e-12..=2.0 + 1e-12).contains(&level[c]));
            }
        }
        assert_eq!(s.drift_at(99), s.drift_at(0));
        assert_eq!(s.drift_at(10_000), s.drift_at(999));
    }
}
