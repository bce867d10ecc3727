//! Zero-bias laws and couplings for sums of independent summands,
//! exchangeable pairs, and the Berry–Esseen style bounds built on them.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use rand::{Rng, RngCore};

use crate::distances::{
    empirical_kolmogorov, empirical_wasserstein, kolmogorov_distance, wasserstein_distance, Atomic, DistanceReport,
    Distribution, Law, Normal, Uniform, MAX_ATOMS,
};
use crate::error::{bail, Result};
use crate::mc::{Estimate, Executor, MonteCarlo, Moments};
use crate::quad::{integrate, Tolerance};
use crate::special::NORMAL_ABS_THIRD;

/// Tolerance on Σσ² = 1.
pub const VARIANCE_TOL: f64 = 1e-12;

/// Berry–Esseen constant for the Kolmogorov distance.
pub const BERRY_ESSEEN_CONSTANT: f64 = 7.1;

/// The law of one summand. The closed-form variants have exact zero-bias
/// laws; `Custom` falls back to quadrature.
#[derive(Clone)]
pub enum SummandLaw {
    /// N(0, σ²) with the given σ.
    Normal(f64),
    /// Uniform(−a, a) with the given a.
    Uniform(f64),
    Atomic(Atomic),
    Custom(Law),
}

impl core::fmt::Debug for SummandLaw {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::Normal(s) => write!(f, "Normal({s})"),
            Self::Uniform(a) => write!(f, "Uniform({a})"),
            Self::Atomic(a) => write!(f, "Atomic({} atoms)", a.atoms_slice().len()),
            Self::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl SummandLaw {
    pub fn law(&self) -> Law {
        match self {
            Self::Normal(s) => Arc::new(Normal { mu: 0.0, sigma: *s }),
            Self::Uniform(a) => Arc::new(Uniform { a: -a, b: *a }),
            Self::Atomic(a) => Arc::new(a.clone()),
            Self::Custom(l) => l.clone(),
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match self {
            Self::Normal(s) => s * rng.sample::<f64, _>(rand_distr::StandardNormal),
            Self::Uniform(a) => a * (2.0 * rng.random::<f64>() - 1.0),
            Self::Atomic(a) => a.sample(rng),
            Self::Custom(l) => l.sample(rng),
        }
    }
}

/// One summand X_i with σ_i² = Var X_i and γ_i = E|X_i|³.
#[derive(Debug, Clone)]
pub struct SummandSpec {
    pub law: SummandLaw,
    pub sigma2: f64,
    pub gamma: f64,
}

impl SummandSpec {
    /// Computes σ² and γ from the law. Custom laws use quantile quadrature.
    pub fn new(law: SummandLaw) -> Result<Self> {
        let (mean, sigma2, gamma) = match &law {
            SummandLaw::Normal(s) => {
                if !(*s > 0.0 && s.is_finite()) {
                    bail!(InvalidArgument, "normal summand needs sigma > 0, got {s}");
                }
                (0.0, s * s, NORMAL_ABS_THIRD * s.powi(3))
            }
            SummandLaw::Uniform(a) => {
                if !(*a > 0.0 && a.is_finite()) {
                    bail!(InvalidArgument, "uniform summand needs a > 0, got {a}");
                }
                (0.0, a * a / 3.0, a.powi(3) / 4.0)
            }
            SummandLaw::Atomic(at) => {
                let m = at.mean();
                let atoms = at.atoms_slice();
                let s2 = atoms.iter().map(|p| p.0 * p.0 * p.1).sum();
                let g = atoms.iter().map(|p| p.0.abs().powi(3) * p.1).sum();
                (m, s2, g)
            }
            SummandLaw::Custom(l) => {
                let q = |u: f64| l.quantile(u);
                let tol = Tolerance::new(1e-12, 1e-10);
                let m = integrate(q, 0.0, 1.0, tol)?.value;
                let s2 = integrate(|u| q(u).powi(2), 0.0, 1.0, tol)?.value;
                let g = integrate(|u| q(u).abs().powi(3), 0.0, 1.0, tol)?;
                if !g.converged || !g.value.is_finite() {
                    bail!(Precondition, "summand has no finite third absolute moment");
                }
                (m, s2, g.value)
            }
        };
        if mean.abs() > 1e-12 * sigma2.sqrt().max(1.0) {
            bail!(Precondition, "summand must be mean zero, mean is {mean}");
        }
        if !(sigma2 > 0.0) {
            bail!(InvalidArgument, "summand must have positive variance");
        }
        Ok(Self { law, sigma2, gamma })
    }

    /// ±scale with probability ½ each.
    pub fn rademacher(scale: f64) -> Self {
        Self::new(SummandLaw::Atomic(Atomic::rademacher(scale))).expect("Rademacher summand is valid")
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.law.sample(rng)
    }
}

/// W = Σ X_i with independent mean-zero summands and Var W = 1.
#[derive(Debug, Clone)]
pub struct IndependentSumModel {
    summands: Vec<SummandSpec>,
}

impl IndependentSumModel {
    pub fn new(summands: Vec<SummandSpec>) -> Result<Self> {
        if summands.is_empty() {
            bail!(InvalidArgument, "model needs at least one summand");
        }
        let total: f64 = summands.iter().map(|s| s.sigma2).sum();
        if (total - 1.0).abs() > VARIANCE_TOL {
            bail!(Precondition, "summand variances sum to {total}, not 1");
        }
        Ok(Self { summands })
    }

    /// n i.i.d. copies of `law`, rescaled to unit total variance.
    pub fn iid(law: &SummandLaw, n: usize) -> Result<Self> {
        if n == 0 {
            bail!(InvalidArgument, "model needs at least one summand");
        }
        let base = SummandSpec::new(law.clone())?;
        let c = 1.0 / (n as f64 * base.sigma2).sqrt();
        let scaled = match law {
            SummandLaw::Normal(s) => SummandLaw::Normal(s * c),
            SummandLaw::Uniform(a) => SummandLaw::Uniform(a * c),
            SummandLaw::Atomic(at) => {
                SummandLaw::Atomic(Atomic::new(at.atoms_slice().iter().map(|p| (p.0 * c, p.1)).collect())?)
            }
            SummandLaw::Custom(_) => bail!(Capability, "custom laws cannot be rescaled; build the summands directly"),
        };
        let spec = SummandSpec::new(scaled)?;
        Self::new(alloc::vec![spec; n])
    }

    /// n i.i.d. Rademacher/√n summands.
    pub fn iid_rademacher(n: usize) -> Result<Self> {
        Self::iid(&SummandLaw::Atomic(Atomic::rademacher(1.0)), n)
    }

    pub fn summands(&self) -> &[SummandSpec] {
        &self.summands
    }

    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    /// Σ γ_i.
    pub fn gamma_sum(&self) -> f64 {
        self.summands.iter().map(|s| s.gamma).sum()
    }

    pub fn sample_w(&self, rng: &mut dyn RngCore) -> f64 {
        self.summands.iter().map(|s| s.sample(rng)).sum()
    }

    /// The exact law of W when it is available: N(0, 1) for all-normal
    /// models, and the convolution of the summand laws for atomic models
    /// whose merged support stays within `MAX_ATOMS` at every step.
    pub fn exact_law(&self) -> Option<Law> {
        if self.summands.iter().all(|s| matches!(s.law, SummandLaw::Normal(_))) {
            return Some(Arc::new(Normal::STANDARD));
        }
        let mut acc = Atomic::point_mass(0.0);
        for s in &self.summands {
            match &s.law {
                SummandLaw::Atomic(a) => {
                    if acc.atoms_slice().len().saturating_mul(a.atoms_slice().len()) > 16 * MAX_ATOMS {
                        return None;
                    }
                    acc = acc.convolve(a).ok()?;
                }
                _ => return None,
            }
        }
        Some(Arc::new(acc))
    }
}

/// A law with piecewise-constant density on consecutive intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseUniform {
    edges: Vec<f64>,
    densities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl PiecewiseUniform {
    /// `densities[k]` applies on `[edges[k], edges[k+1])`.
    pub fn new(edges: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if edges.len() != densities.len() + 1 || densities.is_empty() {
            bail!(InvalidArgument, "need one more edge than densities");
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) || densities.iter().any(|d| !(*d >= 0.0)) {
            bail!(InvalidArgument, "edges must increase and densities be nonnegative");
        }
        let mut acc = 0.0;
        let cumulative: Vec<f64> = densities
            .iter()
            .zip(edges.windows(2))
            .map(|(d, w)| {
                acc += d * (w[1] - w[0]);
                acc
            })
            .collect();
        if (acc - 1.0).abs() > 1e-9 {
            bail!(InvalidArgument, "piecewise density integrates to {acc}, not 1");
        }
        Ok(Self {
            edges,
            densities,
            cumulative,
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    fn raw_moment(&self, k: i32) -> f64 {
        self.densities
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, w)| d * (w[1].powi(k + 1) - w[0].powi(k + 1)) / (k + 1) as f64)
            .sum()
    }
}

impl Distribution for PiecewiseUniform {
    fn cdf(&self, x: f64) -> f64 {
        if x < self.edges[0] {
            return 0.0;
        }
        let k = self.edges.partition_point(|&e| e <= x);
        if k >= self.edges.len() {
            return 1.0;
        }
        let before = if k >= 2 { self.cumulative[k - 2] } else { 0.0 };
        (before + self.densities[k - 1] * (x - self.edges[k - 1])).min(1.0)
    }
    fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let k = self.cumulative.partition_point(|&c| c < u).min(self.densities.len() - 1);
        let before = if k > 0 { self.cumulative[k - 1] } else { 0.0 };
        let d = self.densities[k];
        if d == 0.0 {
            return self.edges[k + 1];
        }
        (self.edges[k] + (u - before) / d).min(self.edges[k + 1])
    }
    fn density(&self, x: f64) -> Option<f64> {
        if x < self.edges[0] || x > self.edges[self.edges.len() - 1] {
            return Some(0.0);
        }
        let k = self.edges.partition_point(|&e| e <= x).clamp(1, self.densities.len());
        Some(self.densities[k - 1])
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.quantile(rng.random::<f64>())
    }
    fn support(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.edges.len() - 1])
    }
    fn mean(&self) -> f64 {
        self.raw_moment(1)
    }
    fn variance(&self) -> f64 {
        let m = self.mean();
        self.raw_moment(2) - m * m
    }
}

/// Zero-bias law of Uniform(−a, a): density 3(a² − t²)/(4a³).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformZeroBias {
    pub a: f64,
}

impl Distribution for UniformZeroBias {
    fn cdf(&self, x: f64) -> f64 {
        let a = self.a;
        let t = x.clamp(-a, a);
        (3.0 * a * a * (t + a) - (t.powi(3) + a.powi(3))) / (4.0 * a.powi(3))
    }
    fn quantile(&self, u: f64) -> f64 {
        // F(t) = ½ + (3s − s³)/4 with s = t/a; the root in [−1, 1] is
        // s = 2 sin(asin(2u − 1)/3).
        let v = (2.0 * u.clamp(0.0, 1.0) - 1.0).clamp(-1.0, 1.0);
        2.0 * self.a * (v.asin() / 3.0).sin()
    }
    fn density(&self, x: f64) -> Option<f64> {
        let a = self.a;
        Some(if x.abs() <= a { 3.0 * (a * a - x * x) / (4.0 * a.powi(3)) } else { 0.0 })
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.quantile(rng.random::<f64>())
    }
    fn support(&self) -> (f64, f64) {
        (-self.a, self.a)
    }
    fn mean(&self) -> f64 {
        0.0
    }
    fn variance(&self) -> f64 {
        self.a * self.a / 5.0
    }
}

/// Zero-bias law of an arbitrary mean-zero law, through
/// F*(t) = E[X min(X, t)]/σ² and p*(t) = E[X 1(X > t)]/σ², both written
/// as integrals of the quantile function.
#[derive(Clone)]
pub struct QuadratureZeroBias {
    law: Law,
    sigma2: f64,
    third: f64,
    fourth: f64,
}

const ZB_TOL: Tolerance = Tolerance {
    abs: 1e-12,
    rel: 1e-10,
    max_intervals: 4000,
};

impl QuadratureZeroBias {
    pub fn new(law: Law, sigma2: f64) -> Result<Self> {
        let third = integrate(|u| law.quantile(u).powi(3), 0.0, 1.0, ZB_TOL)?.value;
        let fourth = integrate(|u| law.quantile(u).powi(4), 0.0, 1.0, ZB_TOL)?.value;
        Ok(Self {
            law,
            sigma2,
            third,
            fourth,
        })
    }

    fn upper_first(&self, t: f64) -> f64 {
        let u = self.law.cdf(t);
        if u >= 1.0 {
            return 0.0;
        }
        integrate(|v| self.law.quantile(v), u, 1.0, ZB_TOL).map(|r| r.value).unwrap_or(f64::NAN)
    }
}

impl Distribution for QuadratureZeroBias {
    fn cdf(&self, x: f64) -> f64 {
        let u = self.law.cdf(x);
        if u <= 0.0 {
            return 0.0;
        }
        let lower = integrate(|v| self.law.quantile(v).powi(2), 0.0, u, ZB_TOL)
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
        ((lower + x * self.upper_first(x)) / self.sigma2).clamp(0.0, 1.0)
    }
    fn quantile(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = self.law.support();
        if !lo.is_finite() {
            lo = self.law.quantile(1e-300_f64.max(f64::MIN_POSITIVE));
        }
        if !hi.is_finite() {
            hi = self.law.quantile(1.0 - f64::EPSILON);
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
    fn density(&self, x: f64) -> Option<f64> {
        Some((self.upper_first(x) / self.sigma2).max(0.0))
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.quantile(rng.random::<f64>())
    }
    fn support(&self) -> (f64, f64) {
        self.law.support()
    }
    // σ² E f′(X*) = E X f(X) with f = x²/2 and f = x³/3.
    fn mean(&self) -> f64 {
        self.third / (2.0 * self.sigma2)
    }
    fn variance(&self) -> f64 {
        let m = self.mean();
        self.fourth / (3.0 * self.sigma2) - m * m
    }
    fn eval_tolerance(&self) -> f64 {
        1e-9
    }
}

/// The X-zero-biased law: density σ⁻² E[X 1(X > t)], supported on the
/// convex hull of the support of X.
pub fn zero_bias_distribution(x: &SummandSpec) -> Result<Law> {
    Ok(match &x.law {
        SummandLaw::Normal(s) => Arc::new(Normal { mu: 0.0, sigma: *s }),
        SummandLaw::Uniform(a) => Arc::new(UniformZeroBias { a: *a }),
        SummandLaw::Atomic(at) => {
            let atoms = at.atoms_slice();
            if atoms.len() < 2 {
                bail!(Precondition, "a point mass at zero has no zero-bias law");
            }
            let edges: Vec<f64> = atoms.iter().map(|p| p.0).collect();
            let mut tail = 0.0;
            let mut densities: Vec<f64> = atoms[1..]
                .iter()
                .rev()
                .map(|p| {
                    tail += p.0 * p.1;
                    tail / x.sigma2
                })
                .collect();
            densities.reverse();
            Arc::new(PiecewiseUniform::new(edges, densities)?)
        }
        SummandLaw::Custom(l) => Arc::new(QuadratureZeroBias::new(l.clone(), x.sigma2)?),
    })
}

/// Draws (W, W*) with I ∝ σ_i² and X_I* independent of everything else.
#[derive(Clone)]
pub struct ZeroBiasCoupling {
    model: IndependentSumModel,
    star: Vec<Law>,
    cumulative: Vec<f64>,
}

impl ZeroBiasCoupling {
    pub fn new(model: &IndependentSumModel) -> Result<Self> {
        let star = model.summands.iter().map(zero_bias_distribution).collect::<Result<Vec<_>>>()?;
        let mut acc = 0.0;
        let cumulative = model
            .summands
            .iter()
            .map(|s| {
                acc += s.sigma2;
                acc
            })
            .collect();
        Ok(Self {
            model: model.clone(),
            star,
            cumulative,
        })
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        let u = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.star.len() - 1);
        let mut w = 0.0;
        let mut xi = 0.0;
        for (j, s) in self.model.summands.iter().enumerate() {
            let x = s.sample(rng);
            if j == i {
                xi = x;
            }
            w += x;
        }
        let x_star = self.star[i].sample(rng);
        (w, w - xi + x_star)
    }
}

/// Draws (W, W*) from the zero-bias coupling of `model`.
pub fn zero_bias_coupling_sample(model: &IndependentSumModel, rng: &mut dyn RngCore) -> Result<(f64, f64)> {
    Ok(ZeroBiasCoupling::new(model)?.sample(rng))
}

/// A Monte Carlo estimate checked against a proven cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapCheck {
    pub estimate: Estimate,
    pub cap: f64,
    /// estimate ≤ cap + 4 se.
    pub pass: bool,
}

impl CapCheck {
    fn new(estimate: Estimate, cap: f64) -> Self {
        Self {
            estimate,
            cap,
            pass: estimate.mean <= cap + 4.0 * estimate.se,
        }
    }
}

/// E|W* − W| against (3/2) Σ γ_i.
pub fn mean_gap<E: Executor>(model: &IndependentSumModel, samples: usize, mc: &MonteCarlo<E>) -> Result<CapCheck> {
    let coupling = ZeroBiasCoupling::new(model)?;
    let est = mc.mean(samples, |rng| {
        let (w, ws) = coupling.sample(rng);
        (ws - w).abs()
    });
    Ok(CapCheck::new(est, 1.5 * model.gamma_sum()))
}

/// A distance to N(0, 1) with the caps it must respect.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceCheck {
    pub distance: DistanceReport,
    pub exact: bool,
    pub cap: f64,
    /// distance ≤ cap, allowing the statistical error bound when empirical.
    pub pass: bool,
}

/// d_W(W, N(0,1)) against 2 E|W* − W| and 3 Σ γ_i.
#[derive(Debug, Clone, PartialEq)]
pub struct WassersteinZeroBiasReport {
    pub check: DistanceCheck,
    pub gap: CapCheck,
    /// 2 × estimated E|W* − W|, with its standard error doubled.
    pub gap_bound: Estimate,
}

pub fn wasserstein_zero_bias_check<E: Executor>(
    model: &IndependentSumModel,
    samples: usize,
    mc: &MonteCarlo<E>,
) -> Result<WassersteinZeroBiasReport> {
    let cap = 3.0 * model.gamma_sum();
    let check = distance_to_normal(model, samples, &mc.fork(1), cap, |law| {
        wasserstein_distance(law, &Normal::STANDARD)
    }, |xs| empirical_wasserstein(xs, &Normal::STANDARD))?;
    let gap = mean_gap(model, samples, &mc.fork(2))?;
    let gap_bound = Estimate {
        mean: 2.0 * gap.estimate.mean,
        se: 2.0 * gap.estimate.se,
        n: gap.estimate.n,
    };
    Ok(WassersteinZeroBiasReport { check, gap, gap_bound })
}

fn distance_to_normal<E: Executor>(
    model: &IndependentSumModel,
    samples: usize,
    mc: &MonteCarlo<E>,
    cap: f64,
    exact: impl Fn(&dyn Distribution) -> Result<DistanceReport>,
    empirical: impl Fn(&[f64]) -> Result<DistanceReport>,
) -> Result<DistanceCheck> {
    if let Some(law) = model.exact_law() {
        let distance = exact(&*law)?;
        let pass = distance.value <= cap + distance.error_bound;
        return Ok(DistanceCheck {
            distance,
            exact: true,
            cap,
            pass,
        });
    }
    let xs = mc.collect(samples, |rng| model.sample_w(rng));
    let distance = empirical(&xs)?;
    let pass = distance.value <= cap + distance.error_bound;
    Ok(DistanceCheck {
        distance,
        exact: false,
        cap,
        pass,
    })
}

/// d_K(W, N(0,1)) against 7.1 Σ γ_i.
pub fn berry_esseen_report<E: Executor>(
    model: &IndependentSumModel,
    samples: usize,
    mc: &MonteCarlo<E>,
) -> Result<DistanceCheck> {
    let cap = BERRY_ESSEEN_CONSTANT * model.gamma_sum();
    distance_to_normal(model, samples, mc, cap, |law| kolmogorov_distance(law, &Normal::STANDARD), |xs| {
        empirical_kolmogorov(xs, &Normal::STANDARD, 0.001)
    })
}

/// P(a ≤ W − X_i ≤ b) against (2√2/3)(b − a) + (4(√2 + 1)/3) Σ γ_j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationReport {
    pub check: CapCheck,
    /// The cap is at least 1, so the inequality says nothing.
    pub vacuous: bool,
}

pub fn concentration_cap(model: &IndependentSumModel, a: f64, b: f64) -> f64 {
    2.0 * SQRT_2 / 3.0 * (b - a) + 4.0 * (SQRT_2 + 1.0) / 3.0 * model.gamma_sum()
}

pub fn concentration_check<E: Executor>(
    model: &IndependentSumModel,
    i: usize,
    a: f64,
    b: f64,
    samples: usize,
    mc: &MonteCarlo<E>,
) -> Result<ConcentrationReport> {
    if i >= model.len() {
        bail!(InvalidArgument, "summand index {i} out of range for {} summands", model.len());
    }
    if !(a <= b) {
        bail!(InvalidArgument, "interval needs a <= b, got [{a}, {b}]");
    }
    let est = mc.mean(samples, |rng| {
        let mut w = 0.0;
        for (j, s) in model.summands.iter().enumerate() {
            let x = s.sample(rng);
            if j != i {
                w += x;
            }
        }
        if a <= w && w <= b {
            1.0
        } else {
            0.0
        }
    });
    let cap = concentration_cap(model, a, b);
    Ok(ConcentrationReport {
        check: CapCheck::new(est, cap),
        vacuous: cap >= 1.0,
    })
}

/// Resample-one exchangeable pair: W′ = W − X_I + X_I′ with I uniform.
#[derive(Debug, Clone)]
pub struct ExchangeablePairModel {
    pub base: IndependentSumModel,
    pub lambda: f64,
}

impl ExchangeablePairModel {
    /// λ = 1/n, which makes E[W′ − W | W] = −λW exact when the summands
    /// are identically distributed.
    pub fn new(base: IndependentSumModel) -> Self {
        let lambda = 1.0 / base.len() as f64;
        Self { base, lambda }
    }
}

/// One draw of (W, W′, T₁) with T₁ = (W′ − W)²/(2λ).
pub fn exchangeable_pair_sample(model: &ExchangeablePairModel, rng: &mut dyn RngCore) -> (f64, f64, f64) {
    let summands = &model.base.summands;
    let i = rng.random_range(0..summands.len());
    let mut w = 0.0;
    let mut xi = 0.0;
    for (j, s) in summands.iter().enumerate() {
        let x = s.sample(rng);
        if j == i {
            xi = x;
        }
        w += x;
    }
    let w_prime = w - xi + summands[i].sample(rng);
    (w, w_prime, (w_prime - w).powi(2) / (2.0 * model.lambda))
}

/// Regression and moment checks on the exchangeable pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCheck {
    /// Least-squares slope of W′ − W on W, with its standard error.
    pub slope: f64,
    pub slope_se: f64,
    pub lambda: f64,
    /// E T₁, which equals E W² = 1.
    pub mean_t1: Estimate,
    /// E[(W′ − W)(W′³ + W³)], which vanishes by exchangeability.
    pub antisymmetry: Estimate,
}

impl PairCheck {
    /// Every statistic within `z` standard errors of its target.
    pub fn within(&self, z: f64) -> bool {
        (self.slope + self.lambda).abs() <= z * self.slope_se
            && self.mean_t1.z_score(1.0).abs() <= z
            && self.antisymmetry.z_score(0.0).abs() <= z
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Regression {
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
}

pub fn pair_check<E: Executor>(model: &ExchangeablePairModel, samples: usize, mc: &MonteCarlo<E>) -> Result<PairCheck> {
    if samples < 3 {
        bail!(InvalidArgument, "pair check needs at least 3 samples");
    }
    let parts = mc.run(samples, |rng, len| {
        let mut reg = Regression::default();
        let mut t1 = Moments::default();
        let mut anti = Moments::default();
        for _ in 0..len {
            let (w, wp, t) = exchangeable_pair_sample(model, rng);
            let d = wp - w;
            reg.n += 1.0;
            reg.sx += w;
            reg.sy += d;
            reg.sxx += w * w;
            reg.sxy += w * d;
            reg.syy += d * d;
            t1.push(t);
            anti.push(d * (wp.powi(3) + w.powi(3)));
        }
        (reg, t1, anti)
    });
    let mut reg = Regression::default();
    let mut t1 = Moments::default();
    let mut anti = Moments::default();
    for (r, a, b) in parts {
        reg.n += r.n;
        reg.sx += r.sx;
        reg.sy += r.sy;
        reg.sxx += r.sxx;
        reg.sxy += r.sxy;
        reg.syy += r.syy;
        t1.merge(&a);
        anti.merge(&b);
    }
    let cxx = reg.sxx - reg.sx * reg.sx / reg.n;
    let cxy = reg.sxy - reg.sx * reg.sy / reg.n;
    let cyy = reg.syy - reg.sy * reg.sy / reg.n;
    let slope = cxy / cxx;
    let rss = (cyy - slope * cxy).max(0.0);
    let slope_se = (rss / (reg.n - 2.0) / cxx).sqrt();
    Ok(PairCheck {
        slope,
        slope_se,
        lambda: model.lambda,
        mean_t1: t1.estimate(),
        antisymmetry: anti.estimate(),
    })
}
