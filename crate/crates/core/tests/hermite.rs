use chaos_stein_core::hermite::{chaos_coefficients, gauss_hermite_rule, hermite_eval, hermite_rank, CoefficientSeries};
use chaos_stein_core::quad::{integrate_line, Tolerance};
use chaos_stein_core::special::{factorial, norm_pdf};
use proptest::prelude::*;

/// H_k(x) = Σ_m (−1)^m k! / (m! (k − 2m)! 2^m) x^{k−2m}.
fn explicit(k: usize, x: f64) -> f64 {
    (0..=k / 2)
        .map(|m| {
            let c = factorial(k) / (factorial(m) * factorial(k - 2 * m) * 2f64.powi(m as i32));
            (if m % 2 == 0 { c } else { -c }) * x.powi((k - 2 * m) as i32)
        })
        .sum()
}

proptest! {
    #[test]
    fn matches_explicit_sum(k in 0usize..=14, x in -4.0..4.0f64) {
        let a = hermite_eval(k, x).unwrap();
        let b = explicit(k, x);
        prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn derivative_identity(k in 1usize..=12, x in -3.0..3.0f64) {
        // H_k′ = k H_{k−1}, checked by a five-point difference.
        let h = 1e-3;
        let f = |t: f64| hermite_eval(k, t).unwrap();
        let d = (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h);
        let want = k as f64 * hermite_eval(k - 1, x).unwrap();
        prop_assert!((d - want).abs() <= 1e-6 * want.abs().max(1.0), "{d} vs {want}");
    }

    #[test]
    fn coefficient_round_trip(c in prop::collection::vec(-2.0..2.0f64, 1..10)) {
        let p = CoefficientSeries::from_coeffs(c.clone());
        let back = chaos_coefficients(|x| p.eval(x), c.len() + 2, 0.0).unwrap();
        for (q, &a) in c.iter().enumerate() {
            prop_assert!((back.coeffs[q] - a).abs() < 1e-10, "a_{q}: {} vs {a}", back.coeffs[q]);
        }
        prop_assert!(back.coeffs[c.len()..].iter().all(|a| a.abs() < 1e-10));
        prop_assert_eq!(back.tail_bound, 0.0);
    }
}

#[test]
fn orthogonality_by_adaptive_quadrature() {
    for j in 0..=6 {
        for k in 0..=6 {
            let r = integrate_line(
                |x| hermite_eval(j, x).unwrap() * hermite_eval(k, x).unwrap() * norm_pdf(x),
                &[0.0],
                Tolerance::new(1e-13, 1e-12),
            )
            .unwrap();
            let want = if j == k { factorial(k) } else { 0.0 };
            assert!((r.value - want).abs() < 1e-9 * want.max(1.0), "({j},{k}): {}", r.value);
        }
    }
}

#[test]
fn gauss_rule_integrates_monomials() {
    let rule = gauss_hermite_rule(12).unwrap();
    for p in 0..24 {
        let want = if p % 2 == 1 { 0.0 } else { (1..p).step_by(2).map(|v| v as f64).product() };
        let got = rule.expect(|x| x.powi(p));
        // Odd moments cancel between terms of size about E|Z|^p.
        let scale: f64 = (1..=p).rev().step_by(2).map(|v| v as f64).product();
        assert!((got - want).abs() <= 1e-10 * scale.max(1.0), "E Z^{p}: {got} vs {want}");
    }
}

#[test]
fn rank_of_even_function() {
    // cos(x) − e^{−1/2} is even and centered. From E[e^{iZ} H_k(Z)] = i^k e^{−1/2},
    // a_k = Re(i^k) e^{−1/2}/k!, so the rank is 2 with a_2 = −e^{−1/2}/2.
    let e = (-0.5f64).exp();
    let s = chaos_coefficients(|x| x.cos() - e, 12, 1e-14).unwrap();
    assert_eq!(hermite_rank(&s, 1e-12).unwrap(), 2);
    for (k, &a) in s.coeffs.iter().enumerate() {
        let re = [1.0, 0.0, -1.0, 0.0][k % 4];
        let want = if k == 0 { 0.0 } else { re * e / factorial(k) };
        assert!((a - want).abs() < 1e-13, "a_{k}: {a} vs {want}");
    }
}
