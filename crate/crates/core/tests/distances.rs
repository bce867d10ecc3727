use chaos_stein_core::distances::{
    empirical_kolmogorov, kolmogorov_distance, second_chaos_distribution, total_variation_density,
    wasserstein_distance, Atomic, Distribution, Normal, Uniform,
};
use chaos_stein_core::mc::MonteCarlo;
use chaos_stein_core::quad::{integrate, integrate_line, integrate_lower, integrate_upper, Tolerance};
use chaos_stein_core::special::norm_cdf;
use proptest::prelude::*;

#[test]
fn normal_shift_closed_forms() {
    for mu in [0.1, 0.5, 2.0] {
        let a = Normal::new(mu, 1.0).unwrap();
        let w = wasserstein_distance(&a, &Normal::STANDARD).unwrap();
        assert!((w.value - mu).abs() < 1e-9, "W1 {mu}: {}", w.value);
        let tv = total_variation_density(&a, &Normal::STANDARD).unwrap();
        let want = 2.0 * norm_cdf(mu / 2.0) - 1.0;
        assert!((tv.value - want).abs() < 1e-8, "TV {mu}: {} vs {want}", tv.value);
        let k = kolmogorov_distance(&a, &Normal::STANDARD).unwrap();
        assert!((k.value - want).abs() < 1e-6, "K {mu}: {} vs {want}", k.value);
    }
}

#[test]
fn normal_scale_wasserstein() {
    for s in [0.5, 1.5, 3.0] {
        let w = wasserstein_distance(&Normal::new(0.0, s).unwrap(), &Normal::STANDARD).unwrap();
        let want = (s - 1.0f64).abs() * (2.0 / std::f64::consts::PI).sqrt();
        assert!((w.value - want).abs() < 1e-9, "{s}: {} vs {want}", w.value);
    }
}

#[test]
fn rademacher_kolmogorov_is_exact() {
    let r = kolmogorov_distance(&Atomic::rademacher(1.0), &Normal::STANDARD).unwrap();
    assert!((r.value - (norm_cdf(1.0) - 0.5)).abs() < 1e-15);
    assert_eq!(r.error_bound, 0.0);
}

#[test]
fn second_chaos_single_and_chi_square() {
    // λ(Z² − 1): P(Y ≤ x) = 2Φ(√(1 + x/λ)) − 1.
    let lam = 0.7;
    let law = second_chaos_distribution(&[lam]).unwrap();
    for x in [-0.6, -0.2, 0.0, 0.5, 3.0] {
        let want = 2.0 * norm_cdf((1.0 + x / lam).sqrt()) - 1.0;
        assert!((law.cdf(x) - want).abs() < 1e-10, "{x}: {} vs {want}", law.cdf(x));
    }
    assert_eq!(law.cdf(-lam - 1e-9), 0.0);
    // λ(Z₁² + Z₂² − 2) with λ = ½: Exp(1) shifted by −1.
    let law = second_chaos_distribution(&[0.5, 0.5]).unwrap();
    for x in [-0.9, -0.3, 0.4, 2.5] {
        let want = 1.0 - (-(x + 1.0f64)).exp();
        assert!((law.cdf(x) - want).abs() < 1e-10);
        assert!((law.density(x).unwrap() - (-(x + 1.0f64)).exp()).abs() < 1e-10);
    }
    // A negative mirror image.
    let neg = second_chaos_distribution(&[-0.5, -0.5]).unwrap();
    assert!((neg.cdf(0.3) - (1.0 - law.cdf(-0.3))).abs() < 1e-10);
}

fn lambdas() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![-1.0..-0.05f64, 0.05..1.0f64], 1..5).prop_map(|v| {
        let s = (2.0 * v.iter().map(|x| x * x).sum::<f64>()).sqrt();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn second_chaos_density_moments(l in lambdas()) {
        let law = second_chaos_distribution(&l).unwrap();
        let (lo, hi) = law.support();
        let tol = Tolerance::new(1e-10, 1e-9);
        // x = edge ± v² removes the 1/√ singularity at a finite edge.
        let m = |p: i32| {
            let g = |x: f64| x.powi(p) * law.density(x).unwrap();
            if lo.is_finite() {
                integrate(|v| 2.0 * v * g(lo + v * v), 0.0, 1.0, tol).unwrap().value
                    + integrate_upper(g, lo + 1.0, tol).unwrap().value
            } else if hi.is_finite() {
                integrate(|v| 2.0 * v * g(hi - v * v), 0.0, 1.0, tol).unwrap().value
                    + integrate_lower(g, hi - 1.0, tol).unwrap().value
            } else {
                integrate_line(g, &[0.0], tol).unwrap().value
            }
        };
        prop_assert!((m(0) - 1.0).abs() < 1e-7, "mass {}", m(0));
        prop_assert!(m(1).abs() < 1e-7, "mean {}", m(1));
        prop_assert!((m(2) - 1.0).abs() < 1e-6, "variance {}", m(2));
        let k3 = 8.0 * l.iter().map(|x| x.powi(3)).sum::<f64>();
        prop_assert!((m(3) - k3).abs() < 1e-5, "third {} vs {k3}", m(3));
    }

    #[test]
    fn kolmogorov_below_total_variation(l in lambdas()) {
        let law = second_chaos_distribution(&l).unwrap();
        let k = kolmogorov_distance(&law, &Normal::STANDARD).unwrap();
        let tv = total_variation_density(&law, &Normal::STANDARD).unwrap();
        prop_assert!(k.value <= tv.value + k.error_bound + tv.error_bound, "{} > {}", k.value, tv.value);
    }
}

#[test]
fn uniform_against_normal() {
    let u = Uniform::new(-3f64.sqrt(), 3f64.sqrt()).unwrap();
    let k = kolmogorov_distance(&u, &Normal::STANDARD).unwrap();
    let tv = total_variation_density(&u, &Normal::STANDARD).unwrap();
    assert!(k.value <= tv.value);
    // The densities cross at ±c with c = √(2 ln(2√3/√(2π))). The normal
    // density is larger on (−c, c) and outside [−√3, √3].
    let r3 = 3f64.sqrt();
    let c = (2.0 * (2.0 * r3 / (2.0 * std::f64::consts::PI).sqrt()).ln()).sqrt();
    let want = (2.0 * norm_cdf(c) - 1.0) - c / r3 + 2.0 * (1.0 - norm_cdf(r3));
    assert!((tv.value - want).abs() < 1e-8, "{} vs {want}", tv.value);
}

#[test]
fn dkw_band_covers_the_truth() {
    let delta = 0.1;
    let mc = MonteCarlo::new(11);
    let mut misses = 0;
    let runs = 200;
    for r in 0..runs {
        let xs = mc.fork(r).collect(500, |rng| Normal::STANDARD.sample(rng));
        let d = empirical_kolmogorov(&xs, &Normal::STANDARD, delta).unwrap();
        if d.value > d.error_bound {
            misses += 1;
        }
    }
    // Misses ~ Binomial(200, ≤ 0.1): mean ≤ 20, sd ≈ 4.2.
    assert!(misses <= 37, "{misses} misses out of {runs}");
}
