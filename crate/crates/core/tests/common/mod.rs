//! Random instances shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use opal::objectives::{Problem1Data, Problem2Data};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

/// A control objective with random data of state and control dimension 2
/// and two predictors.
pub fn random_problem1(rng: &mut ChaCha8Rng) -> Problem1Data {
    let (n, m, t, p) = (2, 2, rng.random_range(3..20), 2);
    let mat = |rng: &mut ChaCha8Rng| DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
    let m_mat = mat(rng);
    let h_lin: Vec<DMatrix<f64>> = (0..p).map(|_| mat(rng)).collect();
    let s0 = m_mat.singular_values().max().powi(2);
    let s = h_lin.iter().map(|b| b.singular_values().max().powi(2)).collect();
    Problem1Data {
        m: m_mat,
        p_const: (0..t).map(|_| rand_vec(rng, n, 1.0)).collect(),
        h_const: (0..t).map(|_| (0..p).map(|_| rand_vec(rng, n, 1.0)).collect()).collect(),
        h_lin,
        epsilon: rng.random_range(0.0..1.0),
        gamma: rng.random_range(0.1..5.0),
        mu: rng.random_range(0.05..0.5),
        s0,
        s,
    }
}

/// An allocation objective over three assets with returns in `[0.5, 2]`.
pub fn random_problem2(rng: &mut ChaCha8Rng) -> Problem2Data {
    let t = rng.random_range(1..20);
    Problem2Data {
        points: (0..t).map(|_| DVector::from_fn(3, |_, _| rng.random_range(0.5..2.0))).collect(),
        q: rng.random_range(0.0..2.0),
        r0: 1.3,
        mu: rng.random_range(0.01..0.2),
    }
}

/// A point of the probability simplex.
pub fn simplex_point(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    let v = DVector::from_fn(n, |_, _| -rng.random_range(1e-12f64..1.0).ln());
    let s = v.sum();
    v / s
}
