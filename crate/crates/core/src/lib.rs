//! Online learning and decision making for systems with unknown dynamics.
//!
//! The next state of a system is modelled as a convex-weighted mix of known
//! predictors, `x_{t+1} ≈ Σ α_i f^(i)(x_t, u_t) + w_t`. Each step the crate
//! refits α from a sliding window of observations, builds a Wasserstein
//! ambiguity set around the one-step predictions, smooths the worst-case loss
//! over that set and takes one accelerated projected gradient step on it.
//!
//! The pieces, in the order a run uses them:
//!
//! - [`window`]: the observation window and predictor basis.
//! - [`learning`]: least-squares α, the radius ε̂ and the confidence ρ.
//! - [`smoothing`]: Moreau envelopes of the norm, the ℓ1 norm and the hinge.
//! - [`objectives`]: the control and allocation objectives with their gradients.
//! - [`solver`]: projections and the online accelerated step.
//! - [`regret`]: the dynamic regret bound and a Monte Carlo estimate of regret.
//! - [`scenarios`]: the oscillator and allocation systems.
//! - [`experiment`]: configured end-to-end runs and trajectory export.
//!
//! ```
//! use opal::experiment::{run, RunConfig, ScenarioKind};
//!
//! let mut config = RunConfig::for_scenario(ScenarioKind::Oscillator);
//! config.horizon = 20;
//! config.t0 = 10;
//! let out = run(&config).unwrap();
//! assert_eq!(out.record.rows.len(), 20);
//! assert!(out.summary.truncated.is_none());
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod learning;
pub mod linalg;
pub mod objectives;
pub mod regret;
pub mod scenarios;
pub mod smoothing;
pub mod solver;
pub mod window;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/learning.md")]
    pub struct Learning;
    #[doc = include_str!("../../../book/src/ambiguity.md")]
    pub struct Ambiguity;
    #[doc = include_str!("../../../book/src/smoothing.md")]
    pub struct Smoothing;
    #[doc = include_str!("../../../book/src/solver.md")]
    pub struct Solver;
    #[doc = include_str!("../../../book/src/regret.md")]
    pub struct Regret;
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub struct Experiments;
}
