mod common;

use chaos_stein_core::chaos::{chaos_inner, evaluate, moment, ChaosVector, GaussianPoint};
use chaos_stein_core::malliavin::{
    derivative, fourth_moment_identity, gamma_t, integration_by_parts_check, ou_pseudo_inverse, stein_identity_check,
    variance_t_formula,
};
use common::*;
use proptest::prelude::*;

fn central_diff(f: &ChaosVector, z: &[f64], j: usize) -> f64 {
    let h = 1e-4;
    let mut zp = z.to_vec();
    let mut zm = z.to_vec();
    zp[j] += h;
    zm[j] -= h;
    (wick_eval(f, &zp) - wick_eval(f, &zm)) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivative_is_partial_derivative(f in chaos_vector(3, 3), z in prop::collection::vec(-2.0..2.0f64, 3)) {
        let d = derivative(&f);
        for (j, dj) in d.iter().enumerate() {
            let got = evaluate(dj, &GaussianPoint(z.clone())).unwrap();
            let want = central_diff(&f, &z, j);
            prop_assert!((got - want).abs() < 1e-6 * want.abs().max(1.0), "j={j}: {got} vs {want}");
        }
    }

    #[test]
    fn gamma_pointwise(f in chaos_vector(3, 3), z in prop::collection::vec(-2.0..2.0f64, 3)) {
        let t = gamma_t(&f).unwrap();
        let g = ou_pseudo_inverse(&f).scale(-1.0);
        let want: f64 = (0..3).map(|j| central_diff(&f, &z, j) * central_diff(&g, &z, j)).sum();
        let got = evaluate(&t, &GaussianPoint(z)).unwrap();
        prop_assert!((got - want).abs() < 1e-6 * want.abs().max(1.0), "{got} vs {want}");
    }

    #[test]
    fn mean_of_gamma_is_variance(f in chaos_vector(3, 4)) {
        let t = gamma_t(&f).unwrap();
        let var = moment(&f, 2).unwrap() - f.mean().powi(2);
        prop_assert!(rel_err(t.mean(), var) < 1e-12, "{} vs {var}", t.mean());
    }

    #[test]
    fn variance_of_gamma_formula(f in kernel_upto(3, 4)) {
        let t = gamma_t(&ChaosVector::single(f.clone()).unwrap()).unwrap();
        let exact = chaos_inner(&t, &t).unwrap() - t.mean().powi(2);
        let formula = variance_t_formula(&f).unwrap();
        prop_assert!(rel_err(exact, formula) < 1e-11, "{exact} vs {formula}");
    }

    #[test]
    fn fourth_moment_formula(f in kernel_upto(3, 4)) {
        let exact = moment(&ChaosVector::single(f.clone()).unwrap(), 4).unwrap();
        let formula = fourth_moment_identity(&f).unwrap();
        prop_assert!(rel_err(exact, formula) < 1e-10, "{exact} vs {formula}");
    }

    #[test]
    fn variance_dominated_by_fourth_cumulant(f in kernel_upto(3, 4)) {
        // Var T ≤ ((k−1)/3k)(E F⁴ − 3(E F²)²).
        let k = f.order() as f64;
        let var_f = moment(&ChaosVector::single(f.clone()).unwrap(), 2).unwrap();
        let cum = fourth_moment_identity(&f).unwrap() - 3.0 * var_f * var_f;
        let v = variance_t_formula(&f).unwrap();
        prop_assert!(v <= (k - 1.0) / (3.0 * k) * cum * (1.0 + 1e-12) + 1e-14, "{v} vs {cum}");
    }

    #[test]
    fn integration_by_parts(f in chaos_vector(3, 3), g in chaos_vector(3, 3)) {
        let r = integration_by_parts_check(&f, &g).unwrap();
        prop_assert!(r.relative() < 1e-12, "{r:?}");
    }

    #[test]
    fn stein_identity_for_polynomials(f in chaos_vector(2, 3), p in prop::collection::vec(-1.0..1.0f64, 1..5)) {
        let r = stein_identity_check(&f, &p).unwrap();
        prop_assert!(r.relative() < 1e-11, "{r:?}");
    }
}
