//! Small dense kernels: SVD-based pseudo-inverse and singular value summaries.
//!
//! All matrices here are tiny (p x p with p the number of predictors), so a
//! full SVD per call is cheap.

use nalgebra::{DMatrix, DVector};

/// Singular values below `RELATIVE_CUTOFF * sigma_max` are treated as zero.
pub const RELATIVE_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    /// Smallest singular value above the cutoff, or 0 when the input is zero.
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub rank: usize,
}

pub fn pseudo_inverse(a: &DMatrix<f64>) -> PseudoInverse {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return PseudoInverse {
            matrix: DMatrix::zeros(cols, rows),
            sigma_min: 0.0,
            sigma_max: 0.0,
            rank: 0,
        };
    }
    // The symmetric eigensolver is far more accurate than the general SVD on
    // the ill-conditioned Gram matrices the learner produces.
    let (values, left, right) = if rows == cols && a.relative_eq(&a.transpose(), 0.0, 0.0) {
        let eig = a.clone().symmetric_eigen();
        let signs = eig.eigenvalues.map(f64::signum);
        let left = eig.eigenvectors.clone();
        let mut right = eig.eigenvectors;
        for (mut col, s) in right.column_iter_mut().zip(signs.iter()) {
            col *= *s;
        }
        (eig.eigenvalues.abs(), left, right)
    } else {
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let v = svd.v_t.expect("v_t requested").transpose();
        (svd.singular_values, u, v)
    };
    let sigma_max = values.iter().copied().fold(0.0, f64::max);
    let cutoff = RELATIVE_CUTOFF * sigma_max;

    let mut pinv = DMatrix::zeros(cols, rows);
    let mut sigma_min = f64::INFINITY;
    let mut rank = 0;
    for (i, &s) in values.iter().enumerate() {
        if sigma_max == 0.0 || s <= cutoff {
            continue;
        }
        rank += 1;
        sigma_min = sigma_min.min(s);
        // pinv += v_i u_i^T / s
        pinv += (right.column(i) * left.column(i).transpose()) / s;
    }
    if rank == 0 {
        sigma_min = 0.0;
    }
    PseudoInverse {
        matrix: pinv,
        sigma_min,
        sigma_max,
        rank,
    }
}

/// Largest singular value (spectral norm).
pub fn sigma_max(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn all_finite<'a>(values: impl IntoIterator<Item = &'a f64>) -> bool {
    values.into_iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pinv_of_invertible_matches_inverse() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let p = pseudo_inverse(&a);
        let inv = a.clone().try_inverse().unwrap();
        assert_relative_eq!(p.matrix, inv, epsilon = 1e-12);
        assert_eq!(p.rank, 2);
    }

    #[test]
    fn pinv_of_zero_is_zero() {
        let p = pseudo_inverse(&DMatrix::zeros(3, 3));
        assert_eq!(p.matrix, DMatrix::zeros(3, 3));
        assert_eq!(p.sigma_min, 0.0);
        assert_eq!(p.rank, 0);
    }

    #[test]
    fn pinv_of_rank_one() {
        // [[1,1],[1,1]] has singular values 2 and 0.
        let a = DMatrix::from_element(2, 2, 1.0);
        let p = pseudo_inverse(&a);
        assert_eq!(p.rank, 1);
        assert_relative_eq!(p.sigma_min, 2.0, epsilon = 1e-12);
        assert_relative_eq!(p.matrix, DMatrix::from_element(2, 2, 0.25), epsilon = 1e-12);
    }

    #[test]
    fn pinv_of_indefinite_symmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let p = pseudo_inverse(&a);
        assert_relative_eq!(p.matrix, a.clone().try_inverse().unwrap(), epsilon = 1e-12);
        assert_relative_eq!(p.sigma_min, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.sigma_max, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn pinv_of_rectangular() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let p = pseudo_inverse(&a);
        assert_relative_eq!(p.matrix, DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.5, 0.0]), epsilon = 1e-12);
    }
}
