use nalgebra::DVector;
use proptest::prelude::*;

use opal::smoothing::{hinge, moreau_l1, moreau_l2, prox_oracle, prox_oracle_radial, prox_oracle_separable, smoothed_hinge};

fn vec_strategy(n: usize, scale: f64) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-scale..scale, n).prop_map(DVector::from_vec)
}

fn l1(x: &DVector<f64>) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn envelopes_sandwich_their_functions(x in vec_strategy(4, 3.0), s in -3.0f64..3.0, mu in 1e-3f64..2.0) {
        let tol = 1e-12;
        let e2 = moreau_l2(&x, mu).value;
        prop_assert!(e2 <= x.norm() + tol && x.norm() <= e2 + 0.5 * mu + tol);
        let e1 = moreau_l1(&x, mu).value;
        prop_assert!(e1 <= l1(&x) + tol && l1(&x) <= e1 + 0.5 * mu * x.len() as f64 + tol);
        let eh = smoothed_hinge(s, mu).0;
        prop_assert!(eh <= hinge(s) + tol && hinge(s) <= eh + 0.5 * mu + tol);
    }

    #[test]
    fn envelope_gradients_are_lipschitz(
        x in vec_strategy(3, 2.0),
        y in vec_strategy(3, 2.0),
        s1 in -2.0f64..3.0,
        s2 in -2.0f64..3.0,
        mu in 1e-3f64..2.0,
    ) {
        let bound = (&x - &y).norm() / mu * (1.0 + 1e-12) + 1e-12;
        prop_assert!((moreau_l2(&x, mu).grad - moreau_l2(&y, mu).grad).norm() <= bound);
        prop_assert!((moreau_l1(&x, mu).grad - moreau_l1(&y, mu).grad).norm() <= bound);
        let dh = (smoothed_hinge(s1, mu).1 - smoothed_hinge(s2, mu).1).abs();
        prop_assert!(dh <= (s1 - s2).abs() / mu * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn gradients_match_central_differences(x in vec_strategy(3, 2.0), s in -2.0f64..3.0, mu in 0.01f64..1.0) {
        let step = 1e-6;
        let margin = 10.0 * step;
        // Skip points within the margin of a branch switch.
        prop_assume!((x.norm() - mu).abs() > margin && x.iter().all(|v| (v.abs() - mu).abs() > margin && v.abs() > margin));
        prop_assume!((s - 1.0).abs() > margin && (s - (1.0 - mu)).abs() > margin);

        let check = |g: f64, fd: f64| (g - fd).abs() <= 1e-6 * g.abs().max(1.0);
        let g2 = moreau_l2(&x, mu).grad;
        let g1 = moreau_l1(&x, mu).grad;
        for i in 0..3 {
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += step;
            dn[i] -= step;
            let fd2 = (moreau_l2(&up, mu).value - moreau_l2(&dn, mu).value) / (2.0 * step);
            let fd1 = (moreau_l1(&up, mu).value - moreau_l1(&dn, mu).value) / (2.0 * step);
            prop_assert!(check(g2[i], fd2), "l2 {} vs {}", g2[i], fd2);
            prop_assert!(check(g1[i], fd1), "l1 {} vs {}", g1[i], fd1);
        }
        let fdh = (smoothed_hinge(s + step, mu).0 - smoothed_hinge(s - step, mu).0) / (2.0 * step);
        prop_assert!(check(smoothed_hinge(s, mu).1, fdh));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_forms_match_numerical_prox(x in vec_strategy(2, 2.0), s in -2.0f64..3.0, mu in 0.01f64..1.0) {
        let grid = 1e-4;
        prop_assert!((moreau_l2(&x, mu).value - prox_oracle_radial(|r| r, &x, mu, grid)).abs() <= 1e-3);
        prop_assert!((moreau_l1(&x, mu).value - prox_oracle_separable(f64::abs, &x, mu, grid)).abs() <= 1e-3);
        prop_assert!((smoothed_hinge(s, mu).0 - prox_oracle(hinge, s, mu, grid)).abs() <= 1e-3);
    }

    #[test]
    fn norm_envelope_keeps_the_minimizer(lo in vec_strategy(2, 1.0), width in vec_strategy(2, 1.0), mu in 0.01f64..1.0) {
        // A box containing the origin: both F and F_mu are minimized only at 0.
        let lo = lo.map(|v| -v.abs() - 1e-3);
        let hi = width.map(|v| v.abs() + 1e-3);
        let n = 41;
        let mut best = (f64::INFINITY, DVector::zeros(2));
        for i in 0..n {
            for j in 0..n {
                let p = DVector::from_vec(vec![
                    lo[0] + (hi[0] - lo[0]) * i as f64 / (n - 1) as f64,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / (n - 1) as f64,
                ]);
                let v = moreau_l2(&p, mu).value;
                if v < best.0 {
                    best = (v, p);
                }
            }
        }
        let origin = DVector::zeros(2);
        prop_assert_eq!(moreau_l2(&origin, mu).value, 0.0);
        prop_assert_eq!(moreau_l1(&origin, mu).value, 0.0);
        prop_assert!(best.0 >= 0.0);
        // The grid minimizer is the grid point closest to the origin.
        let spacing = (&hi - &lo).norm() / (n - 1) as f64;
        prop_assert!(best.1.norm() <= spacing);
    }
}
