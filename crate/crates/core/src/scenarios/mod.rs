//! Ground-truth simulators and predictor bases for the two case studies.

mod allocation;
mod noise;
mod oscillator;

pub use allocation::{
    allocation_alpha_star, allocation_basis, allocation_step, AllocationParams, DriftSchedule, ALLOCATION_NOISE_MASK,
};
pub use noise::sample_noise;
pub use oscillator::{
    oscillator_alpha_star, oscillator_basis, oscillator_reference_step, oscillator_step, rotate, OscillatorParams,
};
