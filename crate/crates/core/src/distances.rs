//! One-dimensional laws and the Kolmogorov, Wasserstein and total
//! variation distances between them.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{bail, Error, Result};
use crate::quad::{integrate_line, integrate_upper, Integral, Tolerance};
use crate::special::{norm_cdf, norm_pdf, norm_quantile};

/// A univariate law. `cdf` is right-continuous; `atoms`, when present,
/// lists every point mass in increasing order.
pub trait Distribution: Send + Sync {
    fn cdf(&self, x: f64) -> f64;

    /// P(X < x).
    fn cdf_left(&self, x: f64) -> f64 {
        let mass = self
            .atoms()
            .and_then(|a| a.iter().find(|p| p.0 == x).map(|p| p.1))
            .unwrap_or(0.0);
        self.cdf(x) - mass
    }

    /// Generalized inverse inf{x : F(x) ≥ u}.
    fn quantile(&self, u: f64) -> f64;

    fn density(&self, _x: f64) -> Option<f64> {
        None
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64;

    /// Smallest closed interval carrying all the mass (possibly infinite).
    fn support(&self) -> (f64, f64);

    fn atoms(&self) -> Option<&[(f64, f64)]> {
        None
    }

    fn mean(&self) -> f64;

    fn variance(&self) -> f64;

    /// Absolute accuracy of `cdf` and `density` values (zero when they are
    /// closed forms).
    fn eval_tolerance(&self) -> f64 {
        0.0
    }
}

/// Shared handle to any law.
pub type Law = Arc<dyn Distribution>;

/// True when the atoms carry all of the mass.
pub fn is_purely_atomic(d: &dyn Distribution) -> bool {
    d.atoms()
        .map(|a| (a.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-12)
        .unwrap_or(false)
}

/// Quantile by bisection on a continuous cdf within `[lo, hi]`.
fn bisect_quantile(cdf: impl Fn(f64) -> f64, u: f64, mut lo: f64, mut hi: f64) -> f64 {
    if !lo.is_finite() {
        lo = -1.0;
        while cdf(lo) > u {
            lo *= 2.0;
        }
    }
    if !hi.is_finite() {
        hi = 1.0;
        while cdf(hi) < u {
            hi *= 2.0;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// N(μ, σ²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal {
    pub mu: f64,
    pub sigma: f64,
}

impl Normal {
    pub const STANDARD: Normal = Normal { mu: 0.0, sigma: 1.0 };

    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            bail!(InvalidArgument, "normal law needs finite mean and sigma > 0, got ({mu}, {sigma})");
        }
        Ok(Self { mu, sigma })
    }
}

impl Distribution for Normal {
    fn cdf(&self, x: f64) -> f64 {
        norm_cdf((x - self.mu) / self.sigma)
    }
    fn quantile(&self, u: f64) -> f64 {
        self.mu + self.sigma * norm_quantile(u)
    }
    fn density(&self, x: f64) -> Option<f64> {
        Some(norm_pdf((x - self.mu) / self.sigma) / self.sigma)
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mu + self.sigma * z
    }
    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn mean(&self) -> f64 {
        self.mu
    }
    fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Uniform(a, b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    pub a: f64,
    pub b: f64,
}

impl Uniform {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b && a.is_finite() && b.is_finite()) {
            bail!(InvalidArgument, "uniform law needs finite a < b, got ({a}, {b})");
        }
        Ok(Self { a, b })
    }
}

impl Distribution for Uniform {
    fn cdf(&self, x: f64) -> f64 {
        ((x - self.a) / (self.b - self.a)).clamp(0.0, 1.0)
    }
    fn quantile(&self, u: f64) -> f64 {
        self.a + u.clamp(0.0, 1.0) * (self.b - self.a)
    }
    fn density(&self, x: f64) -> Option<f64> {
        Some(if x >= self.a && x <= self.b { 1.0 / (self.b - self.a) } else { 0.0 })
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.a + rng.random::<f64>() * (self.b - self.a)
    }
    fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }
    fn mean(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
    fn variance(&self) -> f64 {
        (self.b - self.a).powi(2) / 12.0
    }
}

/// Finitely supported law.
#[derive(Debug, Clone, PartialEq)]
pub struct Atomic {
    atoms: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
}

/// Largest support an exact discrete law may have.
pub const MAX_ATOMS: usize = 1_000_000;

impl Atomic {
    /// Sorts and merges coincident locations. Masses must be nonnegative
    /// and sum to one.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            bail!(InvalidArgument, "atomic law needs at least one atom");
        }
        if atoms.iter().any(|p| !(p.0.is_finite() && p.1 >= 0.0)) {
            bail!(InvalidArgument, "atoms need finite locations and nonnegative masses");
        }
        if atoms.len() > MAX_ATOMS {
            bail!(Capability, "{} atoms exceed the limit {MAX_ATOMS}", atoms.len());
        }
        atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, m) in atoms {
            match merged.last_mut() {
                Some(last) if (last.0 - x).abs() <= 1e-12 * (1.0 + x.abs()) => last.1 += m,
                _ => merged.push((x, m)),
            }
        }
        merged.retain(|p| p.1 > 0.0);
        let total: f64 = merged.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            bail!(InvalidArgument, "atom masses sum to {total}, not 1");
        }
        merged.iter_mut().for_each(|p| p.1 /= total);
        let mut acc = 0.0;
        let cumulative = merged
            .iter()
            .map(|p| {
                acc += p.1;
                acc
            })
            .collect();
        Ok(Self {
            atoms: merged,
            cumulative,
        })
    }

    pub fn point_mass(x: f64) -> Self {
        Self::new(vec![(x, 1.0)]).expect("valid point mass")
    }

    /// ±scale with probability ½ each.
    pub fn rademacher(scale: f64) -> Self {
        Self::new(vec![(-scale, 0.5), (scale, 0.5)]).expect("valid Rademacher law")
    }

    /// (Binomial(n, ½) − n/2)/√(n/4).
    pub fn standardized_binomial(n: usize) -> Result<Self> {
        if n == 0 {
            bail!(InvalidArgument, "binomial law needs n >= 1");
        }
        let half_n = n as f64 / 2.0;
        let sd = half_n.sqrt() / SQRT_2_F;
        let mut atoms = Vec::with_capacity(n + 1);
        let mut ln_c = 0.0;
        for k in 0..=n {
            if k > 0 {
                ln_c += libm::log((n - k + 1) as f64) - libm::log(k as f64);
            }
            let p = (ln_c - n as f64 * core::f64::consts::LN_2).exp();
            atoms.push(((k as f64 - half_n) / sd, p));
        }
        Self::new(atoms)
    }

    pub fn atoms_slice(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Law of X + Y for independent X ~ self, Y ~ other.
    pub fn convolve(&self, other: &Atomic) -> Result<Atomic> {
        let size = self.atoms.len().saturating_mul(other.atoms.len());
        if size > 16 * MAX_ATOMS {
            bail!(Capability, "convolution of {size} atom pairs is too large");
        }
        let mut out = Vec::with_capacity(size);
        for &(x, p) in &self.atoms {
            for &(y, q) in &other.atoms {
                out.push((x + y, p * q));
            }
        }
        Atomic::new(out)
    }
}

const SQRT_2_F: f64 = core::f64::consts::SQRT_2;

impl Distribution for Atomic {
    fn cdf(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|p| p.0 <= x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1].min(1.0)
        }
    }
    fn cdf_left(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|p| p.0 < x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1].min(1.0)
        }
    }
    fn quantile(&self, u: f64) -> f64 {
        let k = self.cumulative.partition_point(|&c| c < u);
        self.atoms[k.min(self.atoms.len() - 1)].0
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.quantile(rng.random::<f64>())
    }
    fn support(&self) -> (f64, f64) {
        (self.atoms[0].0, self.atoms[self.atoms.len() - 1].0)
    }
    fn atoms(&self) -> Option<&[(f64, f64)]> {
        Some(&self.atoms)
    }
    fn mean(&self) -> f64 {
        self.atoms.iter().map(|p| p.0 * p.1).sum()
    }
    fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|p| (p.0 - m).powi(2) * p.1).sum()
    }
}

/// Law of Σ λ_j (Z_j² − 1) for i.i.d. standard normal Z_j.
///
/// The cdf and density come from Gil-Pelaez inversion along two rays
/// rotated by π/4 into the half-plane where e^{−itω} decays, with the
/// vertex shifted off the origin by half the distance to the nearest
/// branch point. On those rays the integrand decays exponentially, so an
/// adaptive half-line quadrature converges to near machine precision.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondChaos {
    lambdas: Vec<f64>,
    shift: f64,
    tol: Tolerance,
}

pub const MAX_EIGENVALUES: usize = 64;

impl SecondChaos {
    pub fn new(lambdas: &[f64]) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() > MAX_EIGENVALUES {
            bail!(
                InvalidArgument,
                "second-chaos law needs 1..={MAX_EIGENVALUES} eigenvalues, got {}",
                lambdas.len()
            );
        }
        if lambdas.iter().any(|&l| l == 0.0 || !l.is_finite()) {
            bail!(InvalidArgument, "eigenvalues must be finite and nonzero");
        }
        Ok(Self {
            lambdas: lambdas.to_vec(),
            shift: lambdas.iter().sum(),
            tol: Tolerance::new(1e-13, 1e-12),
        })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    fn max_pos(&self) -> Option<f64> {
        self.lambdas.iter().copied().filter(|&l| l > 0.0).reduce(f64::max)
    }

    fn max_neg(&self) -> Option<f64> {
        self.lambdas.iter().map(|&l| -l).filter(|&l| l > 0.0).reduce(f64::max)
    }

    fn max_abs(&self) -> f64 {
        self.lambdas.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }

    /// ψ(t) = Π (1 − 2iλt)^{−1/2} e^{−iωt}.
    fn psi(&self, t: Complex64, omega: f64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let mut prod = one;
        for &l in &self.lambdas {
            prod *= (one - Complex64::new(0.0, 2.0 * l) * t).sqrt();
        }
        (Complex64::new(0.0, -omega) * t).exp() / prod
    }

    /// (downward?, vertex offset δ) for the contour at ω.
    fn contour(&self, omega: f64) -> (bool, f64) {
        if omega >= 0.0 {
            (true, 0.25 / self.max_pos().unwrap_or_else(|| self.max_abs()))
        } else {
            (false, 0.25 / self.max_neg().unwrap_or_else(|| self.max_abs()))
        }
    }

    /// P(Y ≤ x) with its quadrature error estimate.
    pub fn cdf_with_error(&self, x: f64) -> Result<Integral> {
        let omega = x + self.shift;
        let (lo, hi) = self.support();
        if x < lo {
            return Ok(exact(0.0));
        }
        if x > hi {
            return Ok(exact(1.0));
        }
        let (down, delta) = self.contour(omega);
        if down {
            // P(S > ω) along t = −iδ + s e^{−iπ/4}.
            let rot = Complex64::from_polar(1.0, -FRAC_PI_4);
            let r = integrate_upper(
                |s| {
                    let t = Complex64::new(0.0, -delta) + rot * s;
                    (self.psi(t, omega) * rot / t).im / PI
                },
                0.0,
                self.tol,
            )?;
            Ok(Integral {
                value: (1.0 - r.value).clamp(0.0, 1.0),
                ..r
            })
        } else {
            let rot = Complex64::from_polar(1.0, FRAC_PI_4);
            let r = integrate_upper(
                |s| {
                    let t = Complex64::new(0.0, delta) + rot * s;
                    -(self.psi(t, omega) * rot / t).im / PI
                },
                0.0,
                self.tol,
            )?;
            Ok(Integral {
                value: r.value.clamp(0.0, 1.0),
                ..r
            })
        }
    }

    /// Density at x with its quadrature error estimate.
    pub fn density_with_error(&self, x: f64) -> Result<Integral> {
        let omega = x + self.shift;
        let (lo, hi) = self.support();
        if x <= lo || x >= hi {
            return Ok(exact(0.0));
        }
        let (down, delta) = self.contour(omega);
        let (vertex, rot) = if down {
            (Complex64::new(0.0, -delta), Complex64::from_polar(1.0, -FRAC_PI_4))
        } else {
            (Complex64::new(0.0, delta), Complex64::from_polar(1.0, FRAC_PI_4))
        };
        let r = integrate_upper(
            |s| {
                let t = vertex + rot * s;
                (self.psi(t, omega) * rot).re / PI
            },
            0.0,
            self.tol,
        )?;
        Ok(Integral {
            value: r.value.max(0.0),
            ..r
        })
    }

    /// Third and fourth cumulants 8Σλ³ and 48Σλ⁴.
    pub fn cumulants(&self) -> (f64, f64) {
        (
            8.0 * self.lambdas.iter().map(|l| l.powi(3)).sum::<f64>(),
            48.0 * self.lambdas.iter().map(|l| l.powi(4)).sum::<f64>(),
        )
    }
}

fn exact(v: f64) -> Integral {
    Integral {
        value: v,
        error: 0.0,
        evaluations: 0,
        converged: true,
    }
}

impl Distribution for SecondChaos {
    fn cdf(&self, x: f64) -> f64 {
        self.cdf_with_error(x).map(|r| r.value).unwrap_or(f64::NAN)
    }
    fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.support().0;
        }
        if u >= 1.0 {
            return self.support().1;
        }
        let (lo, hi) = self.support();
        bisect_quantile(|x| self.cdf(x), u, lo, hi)
    }
    fn density(&self, x: f64) -> Option<f64> {
        Some(self.density_with_error(x).map(|r| r.value).unwrap_or(f64::NAN))
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.lambdas
            .iter()
            .map(|&l| {
                let z: f64 = rng.sample(StandardNormal);
                l * (z * z - 1.0)
            })
            .sum()
    }
    fn support(&self) -> (f64, f64) {
        if self.lambdas.iter().all(|&l| l > 0.0) {
            (-self.shift, f64::INFINITY)
        } else if self.lambdas.iter().all(|&l| l < 0.0) {
            (f64::NEG_INFINITY, -self.shift)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    }
    fn mean(&self) -> f64 {
        0.0
    }
    fn variance(&self) -> f64 {
        2.0 * self.lambdas.iter().map(|l| l * l).sum::<f64>()
    }
    fn eval_tolerance(&self) -> f64 {
        1e-11
    }
}

pub fn second_chaos_distribution(lambdas: &[f64]) -> Result<SecondChaos> {
    SecondChaos::new(lambdas)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Kolmogorov,
    Wasserstein,
    TotalVariation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactJumps,
    QuantileIntegral,
    DensityIntegral,
    EmpiricalDkw,
    /// Adaptive grid with a rigorous bracket from cdf monotonicity.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceReport {
    pub metric: Metric,
    pub value: f64,
    /// Numerical error bound, or the statistical half-width for empirical
    /// methods.
    pub error_bound: f64,
    pub method: Method,
}

/// sup_x |F_A(x) − F_B(x)|.
///
/// Exact when either law is purely atomic: between consecutive atoms of
/// that law its cdf is constant while the other cdf is monotone, so the
/// supremum is attained at an atom or approached just below one. Otherwise
/// the supremum is bracketed on an adaptive grid.
pub fn kolmogorov_distance(a: &dyn Distribution, b: &dyn Distribution) -> Result<DistanceReport> {
    for (atomic, other) in [(a, b), (b, a)] {
        if is_purely_atomic(atomic) {
            let mut sup: f64 = 0.0;
            let other_atoms = other.atoms().unwrap_or(&[]);
            let points = atomic
                .atoms()
                .unwrap_or(&[])
                .iter()
                .map(|p| p.0)
                .chain(other_atoms.iter().map(|p| p.0));
            for x in points {
                sup = sup
                    .max((atomic.cdf(x) - other.cdf(x)).abs())
                    .max((atomic.cdf_left(x) - other.cdf_left(x)).abs());
            }
            return Ok(DistanceReport {
                metric: Metric::Kolmogorov,
                value: sup,
                error_bound: a.eval_tolerance() + b.eval_tolerance(),
                method: Method::ExactJumps,
            });
        }
    }
    kolmogorov_grid(a, b, 1e-7, 200_000)
}

/// Grid bracket for sup |F_A − F_B|: on [x_i, x_{i+1}] monotonicity gives
/// |F_A − F_B| ≤ max(F_A(x_{i+1}) − F_B(x_i), F_B(x_{i+1}) − F_A(x_i)).
/// Intervals whose bracket exceeds the current maximum by more than `tol`
/// are bisected until `max_points` is reached.
pub fn kolmogorov_grid(a: &dyn Distribution, b: &dyn Distribution, tol: f64, max_points: usize) -> Result<DistanceReport> {
    let mut xs: Vec<f64> = Vec::new();
    for d in [a, b] {
        for &u in &[1e-16, 1e-8, 1e-4, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0 - 1e-4, 1.0 - 1e-8, 1.0 - 1e-16] {
            let q = d.quantile(u);
            if q.is_finite() {
                xs.push(q);
            }
        }
        let (lo, hi) = d.support();
        xs.extend([lo, hi].into_iter().filter(|v| v.is_finite()));
        for &(x, _) in d.atoms().unwrap_or(&[]) {
            xs.push(x);
            xs.push(x.next_down());
        }
    }
    if xs.is_empty() {
        xs.push(0.0);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    // Each node keeps (x, F_A(x), F_B(x)); the ends stand for ∓∞.
    let node = |x: f64| (x, a.cdf(x), b.cdf(x));
    let mut nodes: Vec<(f64, f64, f64)> = Vec::with_capacity(xs.len() + 2);
    nodes.push((f64::NEG_INFINITY, 0.0, 0.0));
    nodes.extend(xs.iter().map(|&x| node(x)));
    nodes.push((f64::INFINITY, 1.0, 1.0));
    if nodes.iter().any(|n| !(n.1.is_finite() && n.2.is_finite())) {
        bail!(Evaluation, "cdf returned a non-finite value");
    }
    loop {
        let value = nodes.iter().map(|n| (n.1 - n.2).abs()).fold(0.0, f64::max);
        let bracket = |l: &(f64, f64, f64), r: &(f64, f64, f64)| (r.1 - l.2).max(r.2 - l.1);
        let mut upper = value;
        let mut split: Vec<usize> = Vec::new();
        for i in 0..nodes.len() - 1 {
            let ub = bracket(&nodes[i], &nodes[i + 1]);
            upper = upper.max(ub);
            if ub > value + tol && nodes[i].0.is_finite() && nodes[i + 1].0.is_finite() {
                let mid = 0.5 * (nodes[i].0 + nodes[i + 1].0);
                if mid > nodes[i].0 && mid < nodes[i + 1].0 {
                    split.push(i);
                }
            }
        }
        if split.is_empty() || nodes.len() + split.len() > max_points {
            return Ok(DistanceReport {
                metric: Metric::Kolmogorov,
                value,
                error_bound: (upper - value) + a.eval_tolerance() + b.eval_tolerance(),
                method: Method::Grid,
            });
        }
        let mut next = Vec::with_capacity(nodes.len() + split.len());
        let mut s = split.iter().peekable();
        for i in 0..nodes.len() {
            next.push(nodes[i]);
            if s.peek() == Some(&&i) {
                s.next();
                next.push(node(0.5 * (nodes[i].0 + nodes[i + 1].0)));
            }
        }
        nodes = next;
    }
}

fn breakpoints(laws: &[&dyn Distribution]) -> Vec<f64> {
    let mut xs: Vec<f64> = Vec::new();
    for d in laws {
        let (lo, hi) = d.support();
        xs.extend([lo, hi].into_iter().filter(|v| v.is_finite()));
        xs.extend(d.atoms().unwrap_or(&[]).iter().map(|p| p.0));
        let m = d.mean();
        if m.is_finite() {
            xs.push(m);
        }
    }
    if xs.is_empty() {
        xs.push(0.0);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// ∫ |F_A − F_B| dx, split at every atom and finite support endpoint.
pub fn wasserstein_distance(a: &dyn Distribution, b: &dyn Distribution) -> Result<DistanceReport> {
    let breaks = breakpoints(&[a, b]);
    let tol = Tolerance::new(1e-11, 1e-10);
    let r = integrate_line(|x| (a.cdf(x) - b.cdf(x)).abs(), &breaks, tol)?;
    if !r.converged {
        // A non-integrable tail shows up as a non-convergent transformed
        // integrand near infinity.
        let hi = *breaks.last().unwrap_or(&0.0);
        let lo = *breaks.first().unwrap_or(&0.0);
        let right = integrate_upper(|x| (a.cdf(x) - b.cdf(x)).abs(), hi, tol)?;
        let left = integrate_upper(|x| (a.cdf(2.0 * lo - x) - b.cdf(2.0 * lo - x)).abs(), lo, tol)?;
        if !right.converged || !left.converged {
            return Err(Error::InfiniteMoment);
        }
    }
    Ok(DistanceReport {
        metric: Metric::Wasserstein,
        value: r.value,
        error_bound: r.error,
        method: Method::QuantileIntegral,
    })
}

/// sup |F̂_N − F_B| with the DKW half-width √(ln(2/δ)/(2N)).
pub fn empirical_kolmogorov(samples: &[f64], b: &dyn Distribution, delta: f64) -> Result<DistanceReport> {
    if samples.is_empty() {
        bail!(InvalidArgument, "empirical distance needs samples");
    }
    if samples.len() < 100 {
        bail!(InvalidArgument, "empirical distance needs at least 100 samples, got {}", samples.len());
    }
    if !(delta > 0.0 && delta < 1.0) {
        bail!(InvalidArgument, "confidence level delta must lie in (0, 1), got {delta}");
    }
    let mut xs = samples.to_vec();
    if xs.iter().any(|x| x.is_nan()) {
        bail!(InvalidArgument, "samples contain NaN");
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut sup: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = (j + 1) as f64 / n;
        sup = sup
            .max((upto - b.cdf(xs[i])).abs())
            .max((below - b.cdf_left(xs[i])).abs());
        i = j + 1;
    }
    Ok(DistanceReport {
        metric: Metric::Kolmogorov,
        value: sup,
        error_bound: dkw_bound(samples.len(), delta),
        method: Method::EmpiricalDkw,
    })
}

/// √(ln(2/δ)/(2N)).
pub fn dkw_bound(n: usize, delta: f64) -> f64 {
    (libm::log(2.0 / delta) / (2.0 * n as f64)).sqrt()
}

/// ∫|F̂_N − F_B| for continuous B, exact given Φ-type antiderivatives of
/// B's cdf computed by quadrature between consecutive order statistics.
pub fn empirical_wasserstein(samples: &[f64], b: &dyn Distribution) -> Result<DistanceReport> {
    if samples.len() < 2 {
        bail!(InvalidArgument, "empirical distance needs at least two samples");
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let tol = Tolerance::new(1e-13, 1e-10);
    let lo = xs[0];
    let hi = xs[xs.len() - 1];
    let mut total = crate::quad::integrate_lower(|x| b.cdf(x), lo, tol)?.value;
    total += integrate_upper(|x| 1.0 - b.cdf(x), hi, tol)?.value;
    for (i, w) in xs.windows(2).enumerate() {
        if w[1] > w[0] {
            let level = (i + 1) as f64 / n;
            total += crate::quad::integrate(|x| (level - b.cdf(x)).abs(), w[0], w[1], tol)?.value;
        }
    }
    // E W₁(F̂_N, F) ≤ N^{−1/2} ∫ √(F(1−F)); this is the reported spread.
    let spread = integrate_line(
        |x| {
            let f = b.cdf(x);
            (f * (1.0 - f)).max(0.0).sqrt()
        },
        &breakpoints(&[b]),
        Tolerance::new(1e-8, 1e-8),
    )?
    .value
        / n.sqrt();
    Ok(DistanceReport {
        metric: Metric::Wasserstein,
        value: total,
        error_bound: spread,
        method: Method::EmpiricalDkw,
    })
}

/// ½ ∫ |p_A − p_B|.
pub fn total_variation_density(a: &dyn Distribution, b: &dyn Distribution) -> Result<DistanceReport> {
    if a.density(0.0).is_none() || b.density(0.0).is_none() {
        bail!(
            Capability,
            "total variation needs densities for both laws; the Kolmogorov distance is a lower bound"
        );
    }
    let mut breaks = breakpoints(&[a, b]);
    // Spread the breakpoints over the bulk so that narrow peaks are seen.
    for d in [a, b] {
        for &u in &[0.001, 0.1, 0.5, 0.9, 0.999] {
            let q = d.quantile(u);
            if q.is_finite() {
                breaks.push(q);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let tol = Tolerance::new(1e-9, 1e-8);
    let g = |x: f64| {
        let pa = a.density(x).unwrap_or(f64::NAN);
        let pb = b.density(x).unwrap_or(f64::NAN);
        0.5 * (pa - pb).abs()
    };
    let lower_edges: Vec<f64> = [a.support().0, b.support().0].into_iter().filter(|e| e.is_finite()).collect();
    let upper_edges: Vec<f64> = [a.support().1, b.support().1].into_iter().filter(|e| e.is_finite()).collect();
    let seg_tol = Tolerance {
        abs: tol.abs / (breaks.len() + 1) as f64,
        ..tol
    };
    let mut value = 0.0;
    let mut error = 0.0;
    let mut add = |r: Integral| {
        value += r.value;
        error += r.error;
    };
    add(crate::quad::integrate_lower(g, breaks[0], seg_tol)?);
    add(integrate_upper(g, breaks[breaks.len() - 1], seg_tol)?);
    for w in breaks.windows(2) {
        let (l, r) = (w[0], w[1]);
        // Densities may blow up like |x − edge|^{−1/2} at a support edge;
        // x = edge ± v² makes the integrand bounded there.
        let r = if lower_edges.contains(&l) {
            crate::quad::integrate(|v| 2.0 * v * g(l + v * v), 0.0, (r - l).sqrt(), seg_tol)?
        } else if upper_edges.contains(&r) {
            crate::quad::integrate(|v| 2.0 * v * g(r - v * v), 0.0, (r - l).sqrt(), seg_tol)?
        } else {
            crate::quad::integrate(g, l, r, seg_tol)?
        };
        add(r);
    }
    let r = Integral {
        value,
        error,
        evaluations: 0,
        converged: true,
    };
    let spread = breaks.last().unwrap_or(&0.0) - breaks.first().unwrap_or(&0.0) + 20.0;
    Ok(DistanceReport {
        metric: Metric::TotalVariation,
        value: r.value,
        error_bound: r.error + 0.5 * spread * (a.eval_tolerance() + b.eval_tolerance()),
        method: Method::DensityIntegral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rademacher_kolmogorov() {
        let r = kolmogorov_distance(&Atomic::rademacher(1.0), &Normal::STANDARD).unwrap();
        assert!((r.value - (norm_cdf(1.0) - 0.5)).abs() < 1e-15);
        assert_eq!(r.method, Method::ExactJumps);
    }

    #[test]
    fn binomial_two_ways() {
        let b = Atomic::standardized_binomial(4).unwrap();
        let exact = kolmogorov_distance(&b, &Normal::STANDARD).unwrap();
        let grid = kolmogorov_grid(&b, &Normal::STANDARD, 1e-14, 400_000).unwrap();
        assert!((exact.value - grid.value).abs() < 1e-12, "{exact:?} {grid:?}");
        assert!(grid.error_bound < 1e-12);
    }

    #[test]
    fn normal_self_distances_vanish() {
        let z = Normal::STANDARD;
        assert_eq!(kolmogorov_distance(&z, &z).unwrap().value, 0.0);
        assert_eq!(wasserstein_distance(&z, &z).unwrap().value, 0.0);
        assert_eq!(total_variation_density(&z, &z).unwrap().value, 0.0);
    }

    #[test]
    fn wasserstein_examples() {
        let d = wasserstein_distance(&Atomic::point_mass(0.0), &Atomic::rademacher(1.0)).unwrap();
        assert!((d.value - 1.0).abs() < 1e-12);
        let s = wasserstein_distance(&Normal::STANDARD, &Normal::new(0.5, 1.0).unwrap()).unwrap();
        assert!((s.value - 0.5).abs() < 1e-9, "{s:?}");
    }

    struct Cauchy;
    impl Distribution for Cauchy {
        fn cdf(&self, x: f64) -> f64 {
            0.5 + libm::atan(x) / PI
        }
        fn quantile(&self, u: f64) -> f64 {
            libm::tan(PI * (u - 0.5))
        }
        fn sample(&self, _rng: &mut dyn RngCore) -> f64 {
            0.0
        }
        fn support(&self) -> (f64, f64) {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
        fn mean(&self) -> f64 {
            f64::NAN
        }
        fn variance(&self) -> f64 {
            f64::INFINITY
        }
    }

    #[test]
    fn heavy_tail_is_detected() {
        assert_eq!(wasserstein_distance(&Cauchy, &Normal::STANDARD), Err(Error::InfiniteMoment));
    }

    #[test]
    fn empirical_examples() {
        let zeros = vec![0.0; 100];
        let r = empirical_kolmogorov(&zeros, &Normal::STANDARD, 0.05).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
        assert!((r.error_bound - (libm::log(40.0) / 200.0).sqrt()).abs() < 1e-15);
        assert!((r.error_bound - 0.1358).abs() < 1e-4);
        assert!(empirical_kolmogorov(&[], &Normal::STANDARD, 0.05).is_err());
        assert!((dkw_bound(1_000_000, 0.01) - 0.00163).abs() < 1e-5);
    }

    #[test]
    fn total_variation_shrinks_with_shift() {
        let z = Normal::STANDARD;
        let tv = |mu| total_variation_density(&z, &Normal::new(mu, 1.0).unwrap()).unwrap().value;
        let (a, b, c) = (tv(0.4), tv(0.2), tv(0.1));
        assert!(a > b && b > c && c > 0.0);
        // Closed form 2Φ(μ/2) − 1.
        assert!((a - (2.0 * norm_cdf(0.2) - 1.0)).abs() < 1e-8);
    }

    #[test]
    fn second_chaos_exponential_case() {
        let d = second_chaos_distribution(&[0.5, 0.5]).unwrap();
        let c = d.cdf_with_error(0.0).unwrap();
        assert!((c.value - (1.0 - (-1.0f64).exp())).abs() < 1e-11, "{c:?}");
        for &x in &[-0.9, -0.5, 0.3, 2.0, 6.0] {
            assert!((d.cdf(x) - (1.0 - (-(x + 1.0)).exp())).abs() < 1e-11, "x={x}");
            assert!((d.density(x).unwrap() - (-(x + 1.0)).exp()).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn second_chaos_chi_square_case() {
        let d = second_chaos_distribution(&[1.0]).unwrap();
        assert!((d.cdf(0.0) - (2.0 * norm_cdf(1.0) - 1.0)).abs() < 1e-11);
        let neg = second_chaos_distribution(&[-1.0]).unwrap();
        assert!((neg.cdf(0.0) - (2.0 - 2.0 * norm_cdf(1.0))).abs() < 1e-11);
        // Z₁² − Z₂² = 2UV is symmetric.
        let sym = second_chaos_distribution(&[1.0, -1.0]).unwrap();
        assert!((sym.cdf(0.0) - 0.5).abs() < 1e-11);
        assert!((sym.cdf(1.3) + sym.cdf(-1.3) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn second_chaos_density_normalized() {
        let d = second_chaos_distribution(&[0.6, -0.3, 0.2]).unwrap();
        let tol = Tolerance::new(1e-10, 1e-10);
        let br = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let m0 = integrate_line(|x| d.density(x).unwrap(), &br, tol).unwrap().value;
        let m1 = integrate_line(|x| x * d.density(x).unwrap(), &br, tol).unwrap().value;
        let m2 = integrate_line(|x| x * x * d.density(x).unwrap(), &br, tol).unwrap().value;
        assert!((m0 - 1.0).abs() < 1e-6);
        assert!(m1.abs() < 1e-6);
        assert!((m2 - d.variance()).abs() < 1e-6);
    }

    #[test]
    fn second_chaos_tv_dominates_kolmogorov() {
        let d = second_chaos_distribution(&[1.0]).unwrap();
        let tv = total_variation_density(&d, &Normal::STANDARD).unwrap();
        let k = kolmogorov_distance(&d, &Normal::STANDARD).unwrap();
        assert!(tv.value > 0.0 && tv.value <= 1.0);
        assert!(k.value <= tv.value + tv.error_bound + k.error_bound);
    }
}
