//! Small invariant batteries behind `--selftest`. Each check is cheap
//! enough to run in a second or two.

use chaos_stein_core::chaos::{chaos_inner, hypercontractivity_check, moment, ChaosVector, SymmetricKernel};
use chaos_stein_core::couplings::{
    berry_esseen_report, mean_gap, pair_check, zero_bias_distribution, ExchangeablePairModel, IndependentSumModel,
    SummandLaw, SummandSpec,
};
use chaos_stein_core::distances::{kolmogorov_distance, Atomic, Normal, Uniform};
use chaos_stein_core::experiments::{
    bm_sigma2, qv_fourth_cumulant_bound, qv_fourth_cumulant_exact, qv_sigma_n_sq, toeplitz_traces, fbm_rho,
    StationaryGaussianSpec,
};
use chaos_stein_core::hermite::CoefficientSeries;
use chaos_stein_core::malliavin::{
    fourth_moment_identity, fourth_moment_tv_bound, gamma_t, integration_by_parts_check, stein_identity_check,
    variance_t_formula,
};
use chaos_stein_core::mc::chunk_rng;
use chaos_stein_core::stein::{solve_stein, verify_solution_bounds, Grid, TestFunction};
use chaos_stein_core::Error;

use crate::cli::CommandName;
use crate::commands::{product_deviation, Mc, PRODUCT_TOL};
use crate::random;
use crate::table::Table;

type Check = (&'static str, anyhow::Result<bool>);

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn canonical() -> SymmetricKernel {
    SymmetricKernel::basis_power(0, 2, 1).unwrap().scale(std::f64::consts::FRAC_1_SQRT_2)
}

fn stein() -> Vec<Check> {
    let coarse = Grid {
        lo: -8.0,
        hi: 8.0,
        step: 1e-2,
    };
    let eq = |h: TestFunction| -> anyhow::Result<bool> {
        // f' − w f = h − E h, by central differences away from breaks.
        let sol = solve_stein(h.clone())?;
        let mut ok = true;
        for w in [-2.3, -0.7, 0.4, 1.9] {
            let e = 1e-5;
            let d = (sol.eval(w + e)? - sol.eval(w - e)?) / (2.0 * e);
            ok &= (d - w * sol.eval(w)? - (h.eval(w) - sol.eh_z)).abs() < 1e-6;
        }
        Ok(ok)
    };
    vec![
        ("indicator caps", verify_solution_bounds(&TestFunction::indicator(0.3), coarse).map(|r| r.passed()).map_err(Into::into)),
        ("lipschitz caps", verify_solution_bounds(&TestFunction::lipschitz(1.0, f64::sin), coarse).map(|r| r.passed()).map_err(Into::into)),
        ("bounded caps", verify_solution_bounds(&TestFunction::bounded(1.0, f64::tanh), coarse).map(|r| r.passed()).map_err(Into::into)),
        ("indicator solves the equation", eq(TestFunction::indicator(0.3))),
        ("sin solves the equation", eq(TestFunction::lipschitz(1.0, f64::sin))),
    ]
}

fn berry_esseen(mc: &Mc) -> Vec<Check> {
    let normal_self = || -> anyhow::Result<bool> {
        Ok(kolmogorov_distance(&Normal::STANDARD, &Normal::STANDARD)?.value == 0.0)
    };
    let rademacher = || -> anyhow::Result<bool> {
        let r = berry_esseen_report(&IndependentSumModel::iid_rademacher(16)?, 1000, mc)?;
        // the exact distance is P(W = 0)/2 = C(16,8)/2^17
        Ok(r.exact && r.pass && close(r.distance.value, 12870.0 / 131072.0, 1e-12))
    };
    let normal_model = || -> anyhow::Result<bool> {
        let r = berry_esseen_report(&IndependentSumModel::iid(&SummandLaw::Normal(1.0), 7)?, 1000, mc)?;
        Ok(r.exact && r.distance.value < 1e-12)
    };
    vec![
        ("d_K(N, N) = 0", normal_self()),
        ("rademacher n=16 exact", rademacher()),
        ("normal summands are normal", normal_model()),
    ]
}

fn zero_bias(mc: &Mc) -> Vec<Check> {
    let rademacher = || -> anyhow::Result<bool> {
        // Rademacher zero-biases to Uniform(−1, 1).
        let law = zero_bias_distribution(&SummandSpec::rademacher(1.0))?;
        Ok(kolmogorov_distance(&*law, &Uniform::new(-1.0, 1.0)?)?.value < 1e-12)
    };
    let normal = || -> anyhow::Result<bool> {
        let law = zero_bias_distribution(&SummandSpec::new(SummandLaw::Normal(0.7))?)?;
        Ok(kolmogorov_distance(&*law, &Normal::new(0.0, 0.7)?)?.value < 1e-12)
    };
    let moments = || -> anyhow::Result<bool> {
        // E X* = E X³ / (2σ²) for a skewed two-point law
        let x = SummandSpec::new(SummandLaw::Atomic(Atomic::new(vec![(-1.0, 0.8), (4.0, 0.2)])?))?;
        let law = zero_bias_distribution(&x)?;
        Ok(close(law.mean(), (-0.8 + 64.0 * 0.2) / (2.0 * x.sigma2), 1e-12))
    };
    let gap = || -> anyhow::Result<bool> {
        Ok(mean_gap(&IndependentSumModel::iid(&SummandLaw::Uniform(1.0), 10)?, 20_000, mc)?.pass)
    };
    vec![
        ("rademacher to uniform", rademacher()),
        ("normal is a fixed point", normal()),
        ("zero-bias mean", moments()),
        ("mean gap under cap", gap()),
    ]
}

fn pair(mc: &Mc) -> Vec<Check> {
    let run = || -> anyhow::Result<bool> {
        let m = ExchangeablePairModel::new(IndependentSumModel::iid_rademacher(10)?);
        Ok(m.lambda == 0.1 && pair_check(&m, 50_000, mc)?.within(4.0))
    };
    vec![("rademacher n=10 within 4 SE", run())]
}

fn product(seed: u64) -> Vec<Check> {
    let random_pairs = || -> anyhow::Result<bool> {
        let mut ok = true;
        for i in 0..5 {
            let mut rng = chunk_rng(seed, i);
            let f = random::chaos_vector(&mut rng, 2, 3);
            let g = random::chaos_vector(&mut rng, 2, 3);
            ok &= product_deviation(&f, &g, 100, seed.wrapping_add(i))? < PRODUCT_TOL;
        }
        Ok(ok)
    };
    let isometry = || -> anyhow::Result<bool> {
        // E[I_2(f)²] = 2‖f‖²
        let f = random::kernel(&mut chunk_rng(seed, 99), 2, 4);
        let v = ChaosVector::single(f.clone())?;
        Ok(close(chaos_inner(&v, &v)?, 2.0 * f.norm_sq(), 1e-12))
    };
    vec![("pointwise product", random_pairs()), ("isometry", isometry())]
}

fn fourth_moment(mc: &Mc) -> Vec<Check> {
    let canonical_moments = || -> anyhow::Result<bool> {
        let f = canonical();
        Ok(close(fourth_moment_identity(&f)?, 15.0, 1e-12) && close(variance_t_formula(&f)?, 2.0, 1e-12))
    };
    let identity = || -> anyhow::Result<bool> {
        let f = random::kernel(&mut chunk_rng(7, 0), 3, 3);
        let exact = moment(&ChaosVector::single(f.clone())?, 4)?;
        Ok(close(fourth_moment_identity(&f)?, exact, 1e-9))
    };
    let first_chaos = || -> anyhow::Result<bool> {
        let f = SymmetricKernel::from_entries(1, 2, [(vec![0], 0.6), (vec![1], 0.8)])?;
        let r = fourth_moment_tv_bound(&f, mc, 100)?;
        Ok(r.bound.quantity == 0.0 && r.bound.cap == 0.0)
    };
    let hyper = || -> anyhow::Result<bool> {
        Ok(hypercontractivity_check(&random::kernel(&mut chunk_rng(7, 1), 2, 4))?.pass)
    };
    vec![
        ("canonical E F^4 = 15, Var T = 2", canonical_moments()),
        ("fourth moment identity", identity()),
        ("first chaos is normal", first_chaos()),
        ("hypercontractivity", hyper()),
    ]
}

fn tv_bound(seed: u64) -> Vec<Check> {
    let ibp = || -> anyhow::Result<bool> {
        let mut rng = chunk_rng(seed, 0);
        let f = random::chaos_vector(&mut rng, 2, 3);
        let g = random::chaos_vector(&mut rng, 2, 3);
        let r = integration_by_parts_check(&f, &g)?;
        Ok(r.discrepancy() <= 1e-9 * r.lhs.abs().max(1.0))
    };
    let stein_id = || -> anyhow::Result<bool> {
        let f = random::chaos_vector(&mut chunk_rng(seed, 1), 2, 3);
        let r = stein_identity_check(&f, &[0.5, -1.0, 0.25])?;
        Ok(r.discrepancy() <= 1e-9 * r.lhs.abs().max(1.0))
    };
    let var_t = || -> anyhow::Result<bool> {
        let f = random::kernel(&mut chunk_rng(seed, 2), 2, 3);
        let v = ChaosVector::single(f.clone())?;
        let t = gamma_t(&v)?;
        let var = chaos_inner(&t, &t)? - t.mean().powi(2);
        Ok(close(t.mean(), 2.0 * f.norm_sq(), 1e-12) && close(var, variance_t_formula(&f)?, 1e-9))
    };
    vec![
        ("integration by parts", ibp()),
        ("stein identity", stein_id()),
        ("E T and Var T", var_t()),
    ]
}

fn breuer_major() -> Vec<Check> {
    let white = || -> anyhow::Result<bool> {
        let spec = StationaryGaussianSpec::fbm(0.5, 64)?;
        Ok(close(bm_sigma2(&CoefficientSeries::hermite(2), &spec, 2)?, 2.0, 1e-12))
    };
    let divergent = || -> anyhow::Result<bool> {
        let spec = StationaryGaussianSpec::fbm(0.8, 64)?;
        Ok(matches!(bm_sigma2(&CoefficientSeries::hermite(2), &spec, 2), Err(Error::Summability { .. })))
    };
    vec![("H=1/2 gives sigma^2 = 2", white()), ("H=0.8, q=2 rejected", divergent())]
}

fn fbm_qv() -> Vec<Check> {
    let white = || -> anyhow::Result<bool> {
        Ok(qv_sigma_n_sq(0.5, 128)? == 256.0 && close(qv_fourth_cumulant_exact(0.5, 128)?, 12.0 / 128.0, 1e-12))
    };
    let bounded = || -> anyhow::Result<bool> {
        Ok(qv_fourth_cumulant_exact(0.7, 256)? <= qv_fourth_cumulant_bound(0.7, 256)?)
    };
    let traces = || -> anyhow::Result<bool> {
        let n = 9;
        let rho: Vec<f64> = (0..n as i64).map(|r| fbm_rho(0.65, r)).collect();
        let r = |i: usize, j: usize| rho[i.abs_diff(j)];
        let (mut t3, mut t4) = (0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    t3 += r(a, b) * r(b, c) * r(c, a);
                    for d in 0..n {
                        t4 += r(a, b) * r(b, c) * r(c, d) * r(d, a);
                    }
                }
            }
        }
        let (e3, e4) = toeplitz_traces(&rho);
        Ok(close(e3, t3, 1e-12) && close(e4, t4, 1e-12))
    };
    vec![
        ("white noise closed forms", white()),
        ("exact <= bound", bounded()),
        ("trace route vs brute force", traces()),
    ]
}

pub fn battery(cmd: CommandName, seed: u64, mc: &Mc) -> Vec<Check> {
    match cmd {
        CommandName::SteinSolve => stein(),
        CommandName::BerryEsseen => berry_esseen(mc),
        CommandName::ZeroBias => zero_bias(mc),
        CommandName::PairCheck => pair(mc),
        CommandName::ProductCheck => product(seed),
        CommandName::FourthMoment => fourth_moment(mc),
        CommandName::TvBound => tv_bound(seed),
        CommandName::BreuerMajor => breuer_major(),
        CommandName::FbmQv => fbm_qv(),
    }
}

/// Runs the battery and tabulates it; the last row holds the counts.
pub fn run(cmd: CommandName, seed: u64, mc: &Mc) -> (Table, usize) {
    let mut table = Table::new(&["check", "pass", "detail"]);
    let mut failed = 0;
    let checks = battery(cmd, seed, mc);
    let total = checks.len();
    for (name, res) in checks {
        let (pass, detail) = match res {
            Ok(p) => (p, String::new()),
            Err(e) => (false, format!("{e:#}")),
        };
        failed += usize::from(!pass);
        table.push(vec![name.into(), pass.into(), detail.into()]);
    }
    table.push(vec![
        "summary".into(),
        (failed == 0).into(),
        format!("{} passed, {failed} failed", total - failed).into(),
    ]);
    (table, failed)
}
