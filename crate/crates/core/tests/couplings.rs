use std::sync::Arc;

use chaos_stein_core::couplings::{
    berry_esseen_report, concentration_check, exchangeable_pair_sample, mean_gap, wasserstein_zero_bias_check,
    zero_bias_distribution, ExchangeablePairModel, IndependentSumModel, SummandLaw, SummandSpec, ZeroBiasCoupling,
};
use chaos_stein_core::distances::{Atomic, Uniform};
use chaos_stein_core::mc::{Moments, MonteCarlo};
use chaos_stein_core::quad::{integrate_segments, Tolerance};
use chaos_stein_core::stein::tv_bound_from_t1;
use proptest::prelude::*;

fn centered_atomic() -> impl Strategy<Value = Atomic> {
    prop::collection::vec((-3.0..3.0f64, 0.05..1.0f64), 2..7).prop_filter_map("degenerate", |pts| {
        let total: f64 = pts.iter().map(|p| p.1).sum();
        let mean: f64 = pts.iter().map(|p| p.0 * p.1).sum::<f64>() / total;
        let atoms: Vec<(f64, f64)> = pts.iter().map(|&(x, p)| (x - mean, p / total)).collect();
        let law = Atomic::new(atoms).ok()?;
        (law.atoms_slice().len() >= 2).then_some(law)
    })
}

/// Smooth test functions with bounded derivatives, paired with f′.
type Pair = (fn(f64) -> f64, fn(f64) -> f64);

fn test_functions() -> Vec<Pair> {
    vec![
        (|x| x.sin(), |x| x.cos()),
        (|x| x.tanh(), |x| 1.0 / x.cosh().powi(2)),
        (|x| x.atan(), |x| 1.0 / (1.0 + x * x)),
        (|x| (1.0 + x * x).sqrt(), |x| x / (1.0 + x * x).sqrt()),
        (|x| (-x * x).exp(), |x| -2.0 * x * (-x * x).exp()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zero_bias_identity_exact_for_atomic(law in centered_atomic()) {
        let spec = SummandSpec::new(SummandLaw::Atomic(law.clone())).unwrap();
        let star = zero_bias_distribution(&spec).unwrap();
        let (lo, hi) = star.support();
        let edges: Vec<f64> = law.atoms_slice().iter().map(|p| p.0).collect();
        prop_assert_eq!((lo, hi), (edges[0], edges[edges.len() - 1]));
        for (f, df) in test_functions() {
            let lhs: f64 = law.atoms_slice().iter().map(|&(x, p)| p * x * f(x)).sum();
            let r = integrate_segments(|t| df(t) * star.density(t).unwrap(), &edges, Tolerance::default()).unwrap();
            prop_assert!((lhs - spec.sigma2 * r.value).abs() < 1e-11, "{lhs} vs {}", spec.sigma2 * r.value);
        }
        // f = x²/2 and f = x³/3 give E X* = E X³/(2σ²), E X*² = E X⁴/(3σ²).
        let m3: f64 = law.atoms_slice().iter().map(|p| p.0.powi(3) * p.1).sum();
        let m4: f64 = law.atoms_slice().iter().map(|p| p.0.powi(4) * p.1).sum();
        let mean = m3 / (2.0 * spec.sigma2);
        prop_assert!((star.mean() - mean).abs() < 1e-12, "{} vs {mean}", star.mean());
        let var = m4 / (3.0 * spec.sigma2) - mean * mean;
        prop_assert!((star.variance() - var).abs() < 1e-11, "{} vs {var}", star.variance());
    }

    #[test]
    fn zero_bias_quantile_inverts_cdf(law in centered_atomic(), u in 0.0..1.0f64) {
        let spec = SummandSpec::new(SummandLaw::Atomic(law)).unwrap();
        let star = zero_bias_distribution(&spec).unwrap();
        prop_assert!((star.cdf(star.quantile(u)) - u).abs() < 1e-12);
    }
}

#[test]
fn uniform_zero_bias_identity() {
    let spec = SummandSpec::new(SummandLaw::Uniform(1.3)).unwrap();
    let star = zero_bias_distribution(&spec).unwrap();
    for (f, df) in test_functions() {
        let lhs = integrate_segments(|x| x * f(x) / 2.6, &[-1.3, 1.3], Tolerance::default()).unwrap().value;
        let rhs = integrate_segments(|t| df(t) * star.density(t).unwrap(), &[-1.3, 1.3], Tolerance::default())
            .unwrap()
            .value;
        assert!((lhs - spec.sigma2 * rhs).abs() < 1e-12);
    }
}

fn mixed_model() -> IndependentSumModel {
    // Variances 0.3 (uniform), 0.25 (Rademacher), 0.2 (normal), 0.25 (skewed atomic).
    let a = (3.0f64 * 0.3).sqrt();
    let skew = Atomic::new(vec![(-0.25, 0.8), (1.0, 0.2)]).unwrap();
    IndependentSumModel::new(vec![
        SummandSpec::new(SummandLaw::Uniform(a)).unwrap(),
        SummandSpec::rademacher(0.5),
        SummandSpec::new(SummandLaw::Normal(0.2f64.sqrt())).unwrap(),
        SummandSpec::new(SummandLaw::Atomic(skew)).unwrap(),
    ])
    .unwrap()
}

#[test]
fn zero_bias_identity_by_monte_carlo() {
    let model = mixed_model();
    let coupling = ZeroBiasCoupling::new(&model).unwrap();
    let mc = MonteCarlo::new(404);
    for (k, (f, df)) in test_functions().into_iter().enumerate() {
        let d = mc.fork(k as u64).mean(200_000, |rng| {
            let (w, ws) = coupling.sample(rng);
            w * f(w) - df(ws)
        });
        assert!(d.z_score(0.0).abs() < 4.0, "f#{k}: {d:?}");
    }
}

#[test]
fn summand_moments_match_samples() {
    let specs = [
        SummandSpec::new(SummandLaw::Uniform(1.0)).unwrap(),
        SummandSpec::new(SummandLaw::Normal(0.7)).unwrap(),
        SummandSpec::new(SummandLaw::Atomic(Atomic::new(vec![(-0.25, 0.8), (1.0, 0.2)]).unwrap())).unwrap(),
        SummandSpec::new(SummandLaw::Custom(Arc::new(Uniform::new(-2.0, 2.0).unwrap()))).unwrap(),
    ];
    let n = 100_000;
    for (i, s) in specs.iter().enumerate() {
        let mc = MonteCarlo::new(i as u64);
        let [m1, m2, m3] = mc.means(n, |rng| {
            let x = s.sample(rng);
            [x, x * x, x.abs().powi(3)]
        });
        assert!(m1.mean.abs() <= 4.0 * (s.sigma2 / n as f64).sqrt(), "{i}: mean {m1:?}");
        assert!(m2.z_score(s.sigma2).abs() < 4.0, "{i}: {m2:?} vs {}", s.sigma2);
        assert!(m3.z_score(s.gamma).abs() < 4.0, "{i}: {m3:?} vs {}", s.gamma);
    }
}

#[test]
fn proven_caps_hold_on_battery() {
    let models = [
        IndependentSumModel::iid_rademacher(1).unwrap(),
        IndependentSumModel::iid_rademacher(16).unwrap(),
        IndependentSumModel::iid(&SummandLaw::Uniform(1.0), 100).unwrap(),
        IndependentSumModel::iid(&SummandLaw::Normal(1.0), 1).unwrap(),
        mixed_model(),
    ];
    let mc = MonteCarlo::new(77);
    for (i, m) in models.iter().enumerate() {
        let w = wasserstein_zero_bias_check(m, 50_000, &mc.fork(i as u64)).unwrap();
        assert!(w.check.pass, "{i}: {w:?}");
        assert!(w.gap.pass, "{i}: {w:?}");
        let b = berry_esseen_report(m, 50_000, &mc.fork(100 + i as u64)).unwrap();
        assert!(b.pass, "{i}: {b:?}");
        let c = concentration_check(m, 0, -0.1, 0.3, 50_000, &mc.fork(200 + i as u64)).unwrap();
        assert!(c.check.pass, "{i}: {c:?}");
    }
}

#[test]
fn rademacher_examples() {
    let m16 = IndependentSumModel::iid_rademacher(16).unwrap();
    let w = wasserstein_zero_bias_check(&m16, 10_000, &MonteCarlo::new(1)).unwrap();
    assert!(w.check.exact);
    assert!((w.check.cap - 0.75).abs() < 1e-14);
    let normal = IndependentSumModel::iid(&SummandLaw::Normal(1.0), 1).unwrap();
    let w = wasserstein_zero_bias_check(&normal, 10_000, &MonteCarlo::new(1)).unwrap();
    assert_eq!(w.check.distance.value, 0.0);
    let m25 = IndependentSumModel::iid_rademacher(25).unwrap();
    let g = mean_gap(&m25, 10_000, &MonteCarlo::new(1)).unwrap();
    assert!((g.cap - 0.3).abs() < 1e-14 && g.pass);
    let m64 = IndependentSumModel::iid_rademacher(64).unwrap();
    let c = concentration_check(&m64, 3, 0.0, 0.25, 100_000, &MonteCarlo::new(2)).unwrap();
    assert!((c.check.cap - (2.0 * 2f64.sqrt() / 3.0 * 0.25 + 4.0 * (2f64.sqrt() + 1.0) / 3.0 / 8.0)).abs() < 1e-14);
    assert!(c.check.pass && !c.vacuous);
    let wide = concentration_check(&m64, 0, -10.0, 10.0, 1000, &MonteCarlo::new(2)).unwrap();
    assert!(wide.vacuous && wide.check.estimate.mean == 1.0);
}

#[test]
fn pair_is_exchangeable() {
    let model = ExchangeablePairModel::new(IndependentSumModel::iid(&SummandLaw::Uniform(1.0), 5).unwrap());
    let n = 100_000;
    let pairs = MonteCarlo::new(8).collect(n, |rng| {
        let (w, wp, _) = exchangeable_pair_sample(&model, rng);
        (w, wp)
    });
    let grid: Vec<f64> = (0..20).map(|i| -2.0 + 4.0 * (i as f64 + 0.5) / 20.0).collect();
    for &a in &grid {
        for &b in &grid {
            let mut d = Moments::default();
            for &(w, wp) in &pairs {
                let fwd = (w <= a && wp <= b) as u8 as f64;
                let rev = (wp <= a && w <= b) as u8 as f64;
                d.push(fwd - rev);
            }
            // 400 cells: allow a 4.5 SE band on the paired difference.
            let e = d.estimate();
            assert!(e.mean.abs() <= 4.5 * e.se + 1e-12, "({a}, {b}): {e:?}");
        }
    }
}

#[test]
fn conditional_t1_matches_first_chaos_gamma() {
    // For the Rademacher pair E[T₁ | X] = 1, as T = 1 for a first-chaos
    // element; the binned variance bound must be indistinguishable from 0.
    let model = ExchangeablePairModel::new(IndependentSumModel::iid_rademacher(50).unwrap());
    let pairs = MonteCarlo::new(5).collect(200_000, |rng| {
        let (w, _, t1) = exchangeable_pair_sample(&model, rng);
        (w, t1)
    });
    let r = tv_bound_from_t1(&pairs, 40).unwrap();
    assert!(r.bound_var <= 3.0 * r.se_var + 1e-12, "{r:?}");
}
