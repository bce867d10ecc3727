//! One pipeline per subcommand. Each returns a result table and whether a
//! proven bound was violated beyond its numerical or statistical tolerance.

use std::path::PathBuf;

use anyhow::{bail, Context};
use chaos_stein_core::chaos::{evaluate, multiply, ChaosVector, GaussianPoint, SymmetricKernel};
use chaos_stein_core::couplings::{
    berry_esseen_report, pair_check, wasserstein_zero_bias_check, ExchangeablePairModel, IndependentSumModel,
    SummandLaw,
};
use chaos_stein_core::distances::Atomic;
use chaos_stein_core::experiments::{
    bm_sigma2, bm_simulate, bm_variance_n, qv_rate_table, qv_report, QVReport, StationaryGaussianSpec,
};
use chaos_stein_core::hermite::{hermite_rank, CoefficientSeries, RANK_TOL};
use chaos_stein_core::malliavin::{fourth_moment_tv_bound, tv_bound_conditional_variance};
use chaos_stein_core::mc::{chunk_rng, MonteCarlo};
use chaos_stein_core::stein::{verify_solution_bounds, CheckStatus, Grid, TestFunction};
use clap::{Args, ValueEnum};

use crate::exec::Rayon;
use crate::table::{Cell, Table};
use crate::{kernel_json, random};

pub type Mc = MonteCarlo<Rayon>;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub violation: bool,
}

impl Outcome {
    fn ok(table: Table) -> Self {
        Self { table, violation: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestKindArg {
    /// h = 1(w <= x)
    Indicator,
    /// h = sin(a w), Lipschitz constant |a|
    Lipschitz,
    /// h = tanh(a w), sup norm 1
    Bounded,
}

#[derive(Debug, Clone, Args)]
pub struct SteinSolveArgs {
    #[arg(long, value_enum, default_value = "indicator")]
    pub kind: TestKindArg,
    /// Threshold of the indicator.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x: f64,
    /// Frequency or slope parameter of the smooth test functions.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub scale: f64,
    #[arg(long, default_value_t = Grid::STANDARD.lo, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = Grid::STANDARD.hi, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, default_value_t = Grid::STANDARD.step)]
    pub step: f64,
}

pub fn test_function(kind: TestKindArg, x: f64, a: f64) -> TestFunction {
    match kind {
        TestKindArg::Indicator => TestFunction::indicator(x),
        TestKindArg::Lipschitz => TestFunction::lipschitz(a.abs(), move |w| (a * w).sin()),
        TestKindArg::Bounded => TestFunction::bounded(1.0, move |w| (a * w).tanh()),
    }
}

pub fn stein_solve(args: &SteinSolveArgs) -> anyhow::Result<Outcome> {
    let h = test_function(args.kind, args.x, args.scale);
    let grid = Grid {
        lo: args.lo,
        hi: args.hi,
        step: args.step,
    };
    let report = verify_solution_bounds(&h, grid)?;
    let mut table = Table::new(&["quantity", "observed", "cap", "status"]);
    for c in &report.checks {
        let status = match c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Between => "between",
            CheckStatus::Fail => "fail",
        };
        table.push(vec![c.quantity.into(), c.observed.into(), c.cap.into(), status.into()]);
    }
    Ok(Outcome {
        table,
        violation: !report.passed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Rademacher,
    Uniform,
    Normal,
    /// Two-point law taking 4 with probability 1/5 and -1 otherwise.
    Skewed,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "rademacher")]
    pub model: ModelArg,
    /// Number of i.i.d. summands.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Monte Carlo sample size, used when no exact law is available.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

impl ModelArgs {
    pub fn build(&self) -> anyhow::Result<IndependentSumModel> {
        Ok(IndependentSumModel::iid(&summand_law(self.model)?, self.n)?)
    }
}

pub fn summand_law(model: ModelArg) -> anyhow::Result<SummandLaw> {
    Ok(match model {
        ModelArg::Rademacher => SummandLaw::Atomic(Atomic::rademacher(1.0)),
        ModelArg::Uniform => SummandLaw::Uniform(1.0),
        ModelArg::Normal => SummandLaw::Normal(1.0),
        ModelArg::Skewed => SummandLaw::Atomic(Atomic::new(vec![(-1.0, 0.8), (4.0, 0.2)])?),
    })
}

fn model_name(m: ModelArg) -> &'static str {
    match m {
        ModelArg::Rademacher => "rademacher",
        ModelArg::Uniform => "uniform",
        ModelArg::Normal => "normal",
        ModelArg::Skewed => "skewed",
    }
}

pub fn berry_esseen(args: &ModelArgs, mc: &Mc) -> anyhow::Result<Outcome> {
    let model = args.build()?;
    let r = berry_esseen_report(&model, args.samples, mc)?;
    let table = Table::record(vec![
        ("model", model_name(args.model).into()),
        ("n", args.n.into()),
        ("d_kolmogorov", r.distance.value.into()),
        ("error_bound", r.distance.error_bound.into()),
        ("method", format!("{:?}", r.distance.method).into()),
        ("exact", r.exact.into()),
        ("gamma_sum", model.gamma_sum().into()),
        ("cap", r.cap.into()),
        ("pass", r.pass.into()),
    ]);
    Ok(Outcome {
        table,
        violation: !r.pass,
    })
}

/// Allowed excess of a Monte Carlo estimate over its cap, in standard errors.
pub const SE_TOLERANCE: f64 = 4.0;

pub fn zero_bias(args: &ModelArgs, mc: &Mc) -> anyhow::Result<Outcome> {
    let model = args.build()?;
    let r = wasserstein_zero_bias_check(&model, args.samples, mc)?;
    let table = Table::record(vec![
        ("model", model_name(args.model).into()),
        ("n", args.n.into()),
        ("d_wasserstein", r.check.distance.value.into()),
        ("error_bound", r.check.distance.error_bound.into()),
        ("exact", r.check.exact.into()),
        ("d_wasserstein_cap", r.check.cap.into()),
        ("mean_gap", r.gap.estimate.mean.into()),
        ("mean_gap_se", r.gap.estimate.se.into()),
        ("mean_gap_cap", r.gap.cap.into()),
        ("gap_bound", r.gap_bound.mean.into()),
        ("pass", (r.check.pass && r.gap.pass).into()),
    ]);
    Ok(Outcome {
        table,
        violation: !(r.check.pass && r.gap.pass),
    })
}

pub fn pair(args: &ModelArgs, mc: &Mc) -> anyhow::Result<Outcome> {
    let model = ExchangeablePairModel::new(args.build()?);
    let r = pair_check(&model, args.samples, mc)?;
    let within = r.within(SE_TOLERANCE);
    let table = Table::record(vec![
        ("model", model_name(args.model).into()),
        ("n", args.n.into()),
        ("lambda", r.lambda.into()),
        ("slope", r.slope.into()),
        ("slope_se", r.slope_se.into()),
        ("mean_t1", r.mean_t1.mean.into()),
        ("mean_t1_se", r.mean_t1.se.into()),
        ("antisymmetry", r.antisymmetry.mean.into()),
        ("antisymmetry_se", r.antisymmetry.se.into()),
        ("within_4se", within.into()),
    ]);
    Ok(Outcome {
        table,
        violation: !within,
    })
}

/// Relative tolerance for the pointwise product check.
pub const PRODUCT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Args)]
pub struct ProductArgs {
    /// Left factor as a kernel file; random pairs are used when omitted.
    #[arg(long, requires = "right")]
    pub left: Option<PathBuf>,
    #[arg(long, requires = "left")]
    pub right: Option<PathBuf>,
    /// Number of random kernel pairs (orders <= 3, basis dimension <= 5).
    #[arg(long, default_value_t = 20)]
    pub pairs: usize,
    /// Gaussian evaluation points per pair.
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
}

/// Largest relative deviation of `multiply(f, g)` from the pointwise
/// product over `points` Gaussian draws.
pub fn product_deviation(f: &ChaosVector, g: &ChaosVector, points: usize, seed: u64) -> anyhow::Result<f64> {
    let fg = multiply(f, g)?;
    let mut rng = chunk_rng(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let z = GaussianPoint::sample(f.basis_dim(), &mut rng);
        let direct = evaluate(f, &z)? * evaluate(g, &z)?;
        let algebra = evaluate(&fg, &z)?;
        worst = worst.max((direct - algebra).abs() / direct.abs().max(1.0));
    }
    Ok(worst)
}

pub fn product_check(args: &ProductArgs, seed: u64) -> anyhow::Result<Outcome> {
    let pairs: Vec<(SymmetricKernel, SymmetricKernel)> = match (&args.left, &args.right) {
        (Some(l), Some(r)) => vec![(kernel_json::read(l)?, kernel_json::read(r)?)],
        _ => (0..args.pairs)
            .map(|i| {
                let mut rng = chunk_rng(seed, i as u64);
                let n = rand::Rng::random_range(&mut rng, 1..=5);
                let p = rand::Rng::random_range(&mut rng, 1..=3);
                let q = rand::Rng::random_range(&mut rng, 1..=3);
                (random::kernel(&mut rng, p, n), random::kernel(&mut rng, q, n))
            })
            .collect(),
    };
    let mut table = Table::new(&["pair", "order_left", "order_right", "basis_dim", "max_rel_dev", "pass"]);
    let mut violation = false;
    for (i, (f, g)) in pairs.iter().enumerate() {
        let dev = product_deviation(
            &ChaosVector::single(f.clone())?,
            &ChaosVector::single(g.clone())?,
            args.points,
            seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        )?;
        let pass = dev < PRODUCT_TOL;
        violation |= !pass;
        table.push(vec![
            i.into(),
            f.order().into(),
            g.order().into(),
            f.basis_dim().into(),
            dev.into(),
            pass.into(),
        ]);
    }
    Ok(Outcome { table, violation })
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    /// Kernel JSON file.
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    /// Rescale the kernel to unit variance first.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

impl KernelArgs {
    fn load(&self) -> anyhow::Result<SymmetricKernel> {
        let path = self.kernel.as_ref().context("--kernel is required")?;
        let f = kernel_json::read(path)?;
        if !self.normalize {
            return Ok(f);
        }
        let var = (1..=f.order()).map(|i| i as f64).product::<f64>() * f.norm_sq();
        if var <= 0.0 || var.is_nan() {
            bail!("cannot normalize a zero kernel");
        }
        Ok(f.scale(1.0 / var.sqrt()))
    }
}

pub fn fourth_moment(args: &KernelArgs, mc: &Mc) -> anyhow::Result<Outcome> {
    let f = args.load()?;
    let r = fourth_moment_tv_bound(&f, mc, args.samples)?;
    let b = &r.bound;
    let violation = b.slack < -b.error;
    let table = Table::record(vec![
        ("order", f.order().into()),
        ("basis_dim", f.basis_dim().into()),
        ("distance", b.quantity.into()),
        ("cap", b.cap.into()),
        ("slack", b.slack.into()),
        ("error", b.error.into()),
        ("method", b.method.clone().into()),
        ("fourth_moment", r.fourth_moment.into()),
        ("variance_t", r.variance_t.into()),
        ("variance_t_cap", r.variance_t_cap.into()),
    ]);
    Ok(Outcome { table, violation })
}

pub fn tv_bound(args: &KernelArgs, mc: &Mc) -> anyhow::Result<Outcome> {
    let f = args.load()?;
    let r = tv_bound_conditional_variance(&ChaosVector::single(f.clone())?, args.samples, mc)?;
    let b = r.binned.as_ref();
    // Var E[T|F] <= Var T, so the binned estimate may only exceed the
    // conservative cap by sampling noise.
    let violation = b.is_some_and(|b| b.bound_var > r.conservative_cap + SE_TOLERANCE * b.se_var);
    let table = Table::record(vec![
        ("order", f.order().into()),
        ("basis_dim", f.basis_dim().into()),
        ("mean_t", r.mean_t.into()),
        ("variance_t", r.variance_t.into()),
        ("conservative_cap", r.conservative_cap.into()),
        ("binned_mean_bound", b.map(|b| b.bound_mean).into()),
        ("binned_mean_se", b.map(|b| b.se_mean).into()),
        ("binned_var_bound", b.map(|b| b.bound_var).into()),
        ("binned_var_se", b.map(|b| b.se_var).into()),
        ("bins_used", b.map(|b| b.bins_used).into()),
    ]);
    Ok(Outcome { table, violation })
}

#[derive(Debug, Clone, Args)]
pub struct BreuerMajorArgs {
    #[arg(long, default_value_t = 0.5)]
    pub hurst: f64,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Use phi = H_q.
    #[arg(long, default_value_t = 2, conflicts_with = "coeffs")]
    pub hermite: usize,
    /// Hermite coefficients a_0, a_1, ... of phi.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Option<Vec<f64>>,
    /// Simulated paths; 0 skips the simulation.
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
}

pub fn breuer_major(args: &BreuerMajorArgs, mc: &Mc) -> anyhow::Result<Outcome> {
    let series = match &args.coeffs {
        Some(c) => CoefficientSeries::from_coeffs(c.clone()),
        None => CoefficientSeries::hermite(args.hermite),
    };
    let d = hermite_rank(&series, RANK_TOL)?;
    let spec = StationaryGaussianSpec::fbm(args.hurst, args.n)?;
    let (sigma2, variance_n, distance) = if args.paths > 0 {
        let s = bm_simulate(&series, &spec, d, args.paths, mc)?;
        (s.sigma2, s.variance_n, Some(s.distance))
    } else {
        (bm_sigma2(&series, &spec, d)?, bm_variance_n(&series, &spec)?, None)
    };
    let table = Table::record(vec![
        ("hurst", args.hurst.into()),
        ("n", args.n.into()),
        ("rank", d.into()),
        ("sigma2", sigma2.into()),
        ("variance_n", variance_n.into()),
        ("variance_ratio", (variance_n / sigma2).into()),
        ("d_kolmogorov", distance.map(|r| r.value).into()),
        ("dkw_band", distance.map(|r| r.error_bound).into()),
        ("paths", args.paths.into()),
    ]);
    Ok(Outcome::ok(table))
}

#[derive(Debug, Clone, Args)]
pub struct FbmQvArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.55,0.7,0.75")]
    pub hurst: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048,4096")]
    pub n: Vec<usize>,
}

pub const QV_COLUMNS: [&str; 7] = ["H", "n", "sigma_n_sq", "k4_exact", "k4_bound", "m3", "m_stat"];

fn qv_row(r: &QVReport) -> Vec<Cell> {
    vec![
        r.hurst.into(),
        r.n.into(),
        r.sigma_n_sq.into(),
        r.fourth_cumulant_exact.into(),
        r.fourth_cumulant_bound.into(),
        r.third_moment.into(),
        r.m_stat.into(),
    ]
}

/// Rows per (H, n). With two or more lengths, each H gets a summary row
/// with `n = "slope"`, the log-log slope of √k4 in `k4_exact` and the
/// slope of M in `m_stat`.
pub fn fbm_qv(args: &FbmQvArgs) -> anyhow::Result<Outcome> {
    let mut table = Table::new(&QV_COLUMNS);
    let mut violation = false;
    let mut check = |r: &QVReport| violation |= r.fourth_cumulant_exact > r.fourth_cumulant_bound * (1.0 + 1e-12);
    if args.n.len() < 2 {
        for &h in &args.hurst {
            for &n in &args.n {
                let r = qv_report(h, n)?;
                check(&r);
                table.push(qv_row(&r));
            }
        }
        return Ok(Outcome { table, violation });
    }
    let rt = qv_rate_table(&args.hurst, &args.n)?;
    for (block, s) in rt.rows.chunks(args.n.len()).zip(&rt.slopes) {
        for r in block {
            check(r);
            table.push(qv_row(r));
        }
        table.push(vec![
            s.hurst.into(),
            "slope".into(),
            Cell::Empty,
            s.cumulant_slope.into(),
            Cell::Empty,
            Cell::Empty,
            s.m_slope.into(),
        ]);
    }
    Ok(Outcome { table, violation })
}
