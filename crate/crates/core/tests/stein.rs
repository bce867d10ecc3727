use chaos_stein_core::distances::{Distribution, Uniform};
use chaos_stein_core::mc::MonteCarlo;
use chaos_stein_core::special::{norm_cdf, norm_pdf, norm_sf};
use chaos_stein_core::stein::{solve_stein, verify_solution_bounds, Grid, TestFunction};
use proptest::prelude::*;
use rand_distr::StandardNormal;

/// Five-point derivative with step 1e−3.
fn five_point(f: impl Fn(f64) -> f64, w: f64) -> f64 {
    let h = 1e-3;
    (f(w - 2.0 * h) - 8.0 * f(w - h) + 8.0 * f(w + h) - f(w + 2.0 * h)) / (12.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn indicator_solution_satisfies_equation(x in -3.0..3.0f64, w in -5.0..5.0f64) {
        prop_assume!((w - x).abs() > 0.01);
        let sol = solve_stein(TestFunction::indicator(x)).unwrap();
        let lhs = five_point(|t| sol.eval(t).unwrap(), w) - w * sol.eval(w).unwrap();
        let rhs = if w <= x { 1.0 } else { 0.0 } - norm_cdf(x);
        prop_assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
    }

    #[test]
    fn indicator_solution_closed_form(x in -3.0..3.0f64, w in -6.0..6.0f64) {
        // f(w) = √(2π) e^{w²/2} Φ(min(w,x)) (1 − Φ(max(w,x))), written with
        // the density ratio to avoid overflow.
        let sol = solve_stein(TestFunction::indicator(x)).unwrap();
        let want = norm_cdf(w.min(x)) * norm_sf(w.max(x)) / norm_pdf(w);
        let got = sol.eval(w).unwrap();
        prop_assert!((got - want).abs() < 1e-8 * want.abs().max(1.0), "{got} vs {want}");
    }

    #[test]
    fn smooth_solution_satisfies_equation(a in 0.2..3.0f64, w in -6.0..6.0f64) {
        let sol = solve_stein(TestFunction::lipschitz(a, move |t| (a * t).sin())).unwrap();
        let lhs = five_point(|t| sol.eval(t).unwrap(), w) - w * sol.eval(w).unwrap();
        prop_assert!(sol.eh_z.abs() < 1e-14);
        prop_assert!((lhs - (a * w).sin()).abs() < 1e-8, "{lhs}");
    }

    #[test]
    fn bounds_hold_on_coarse_grid(x in -4.0..4.0f64, a in 0.1..4.0f64) {
        let grid = Grid { lo: -8.0, hi: 8.0, step: 0.05 };
        prop_assert!(verify_solution_bounds(&TestFunction::indicator(x), grid).unwrap().passed());
        let lip = TestFunction::lipschitz(a, move |t| (a * t).cos());
        prop_assert!(verify_solution_bounds(&lip, grid).unwrap().passed());
        let bdd = TestFunction::bounded(1.0, move |t| (a * t).tanh());
        prop_assert!(verify_solution_bounds(&bdd, grid).unwrap().passed());
    }
}

#[test]
fn stein_characterization_by_monte_carlo() {
    // E[f′(W) − W f(W)] vanishes for W ~ N(0,1) and equals
    // P(W ≤ x) − Φ(x) otherwise.
    let x = 0.5;
    let sol = solve_stein(TestFunction::indicator(x)).unwrap();
    let op = |w: f64| sol.deriv(w).unwrap() - w * sol.eval(w).unwrap();
    let mc = MonteCarlo::new(21);
    let normal = mc.mean(100_000, |rng| {
        let z: f64 = rand::Rng::sample(rng, StandardNormal);
        op(z)
    });
    assert!(normal.z_score(0.0).abs() < 4.0, "{normal:?}");
    let u = Uniform::new(-3f64.sqrt(), 3f64.sqrt()).unwrap();
    let unif = mc.fork(1).mean(100_000, |rng| op(u.sample(rng)));
    let want = u.cdf(x) - norm_cdf(x);
    assert!(unif.z_score(want).abs() < 4.0, "{unif:?} vs {want}");
    assert!(want.abs() > 10.0 * unif.se);
}
