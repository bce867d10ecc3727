//! Breuer–Major sums of stationary Gaussian sequences and the quadratic
//! variation of fractional Gaussian noise: exact variances and cumulants
//! through Toeplitz traces, plus seeded path simulation.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;
use rand_distr::StandardNormal;

use crate::chaos::SymmetricKernel;
use crate::distances::{empirical_kolmogorov, DistanceReport, Normal};
use crate::error::{bail, Error, Result};
use crate::hermite::CoefficientSeries;
use crate::linalg::{cholesky, symmetric_eigenvalues, toeplitz_square, Matrix};
use crate::mc::{Executor, MonteCarlo};
use crate::special::factorial;

/// Largest n for which Cholesky path simulation and exact cumulants run.
pub const DEFAULT_MATRIX_CAP: usize = 4096;

/// Largest lag used when summing ρ over ℤ.
pub const MAX_LAG: usize = 1_000_000;

/// Lags with |ρ| below this are treated as the start of the tail.
pub const RHO_CUTOFF: f64 = 1e-12;

/// ρ(r) = ½(|r+1|^{2H} + |r−1|^{2H} − 2|r|^{2H}).
pub fn fbm_rho(h: f64, r: i64) -> f64 {
    let e = 2.0 * h;
    let r = r.unsigned_abs() as f64;
    0.5 * ((r + 1.0).powf(e) + (r - 1.0).abs().powf(e) - 2.0 * r.powf(e))
}

/// Covariance family of a stationary Gaussian sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceFamily {
    /// Increments of fractional Brownian motion with Hurst index H.
    FbmIncrements(f64),
    Iid,
    /// ρ(0), ρ(1), …; lags past the end are zero.
    Custom(Vec<f64>),
}

/// (X_1, …, X_n) centered stationary Gaussian with covariance ρ(i − j).
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryGaussianSpec {
    pub family: CovarianceFamily,
    pub n: usize,
}

impl StationaryGaussianSpec {
    /// Validates the family. Positive semidefiniteness is checked
    /// separately by [`StationaryGaussianSpec::check_psd`].
    pub fn new(family: CovarianceFamily, n: usize) -> Result<Self> {
        if n == 0 {
            bail!(InvalidArgument, "sequence length must be positive");
        }
        match &family {
            CovarianceFamily::FbmIncrements(h) if !(*h > 0.0 && *h < 1.0) => {
                bail!(InvalidArgument, "Hurst index must lie in (0, 1), got {h}")
            }
            CovarianceFamily::Custom(rho) => {
                if rho.first() != Some(&1.0) {
                    bail!(InvalidArgument, "custom covariance needs rho(0) = 1");
                }
                if rho.iter().any(|v| !v.is_finite()) {
                    bail!(InvalidArgument, "custom covariance must be finite");
                }
            }
            _ => {}
        }
        Ok(Self { family, n })
    }

    pub fn fbm(h: f64, n: usize) -> Result<Self> {
        Self::new(CovarianceFamily::FbmIncrements(h), n)
    }

    pub fn rho(&self, r: i64) -> f64 {
        match &self.family {
            CovarianceFamily::FbmIncrements(h) => fbm_rho(*h, r),
            CovarianceFamily::Iid => (r == 0) as u8 as f64,
            CovarianceFamily::Custom(v) => v.get(r.unsigned_abs() as usize).copied().unwrap_or(0.0),
        }
    }

    /// ρ(0), …, ρ(n − 1).
    pub fn rho_row(&self) -> Vec<f64> {
        (0..self.n as i64).map(|r| self.rho(r)).collect()
    }

    pub fn is_white(&self) -> bool {
        match &self.family {
            CovarianceFamily::Iid => true,
            CovarianceFamily::FbmIncrements(h) => *h == 0.5,
            CovarianceFamily::Custom(v) => v[1..].iter().all(|&x| x == 0.0),
        }
    }

    pub fn covariance(&self) -> Matrix {
        Matrix::toeplitz(&self.rho_row())
    }

    /// Cholesky factor of the covariance, or `NotPositiveSemidefinite`.
    /// A matrix whose smallest eigenvalue is at least −1e−10 passes even
    /// when Cholesky breaks down on a zero pivot; its factor is then taken
    /// from the jittered matrix R + 1e−10 I.
    pub fn check_psd(&self) -> Result<Matrix> {
        let r = self.covariance();
        match cholesky(&r) {
            Ok(l) => Ok(l),
            Err(e @ Error::NotPositiveSemidefinite { .. }) => {
                let min = symmetric_eigenvalues(&r)?.first().copied().unwrap_or(0.0);
                if min < -1e-10 {
                    return Err(e);
                }
                let mut jittered = r;
                for i in 0..self.n {
                    jittered.set(i, i, jittered.get(i, i) + 1e-10);
                }
                cholesky(&jittered)
            }
            Err(e) => Err(e),
        }
    }
}

/// Draws paths X = L Z for a fixed Cholesky factor L.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    n: usize,
    factor: Option<Matrix>,
}

impl StationarySampler {
    pub fn new(spec: &StationaryGaussianSpec) -> Result<Self> {
        if spec.is_white() {
            return Ok(Self { n: spec.n, factor: None });
        }
        if spec.n > DEFAULT_MATRIX_CAP {
            bail!(Capability, "Cholesky simulation is limited to n <= {DEFAULT_MATRIX_CAP}, got {}", spec.n);
        }
        Ok(Self {
            n: spec.n,
            factor: Some(spec.check_psd()?),
        })
    }

    /// Fills `out` (length n) with one path, using `z` as scratch.
    pub fn sample_into(&self, rng: &mut dyn RngCore, z: &mut [f64], out: &mut [f64]) {
        use rand::Rng;
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        match &self.factor {
            None => out.copy_from_slice(z),
            Some(l) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = l.row(i)[..=i].iter().zip(&z[..=i]).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        let mut out = vec![0.0; self.n];
        self.sample_into(rng, &mut z, &mut out);
        out
    }
}

/// `paths` independent realizations of the sequence, one per row.
pub fn sample_stationary<E: Executor>(
    spec: &StationaryGaussianSpec,
    paths: usize,
    mc: &MonteCarlo<E>,
) -> Result<Vec<Vec<f64>>> {
    let sampler = StationarySampler::new(spec)?;
    Ok(mc.collect(paths, |rng| sampler.sample(rng)))
}

fn check_series(series: &CoefficientSeries, d: usize) -> Result<()> {
    if series.coeffs.first().is_some_and(|a| a.abs() > 1e-12) {
        bail!(Precondition, "phi must be centered, a_0 = {}", series.coeffs[0]);
    }
    if d == 0 {
        bail!(InvalidArgument, "Hermite rank must be at least 1");
    }
    if let Some(q) = series.coeffs.iter().take(d).position(|a| a.abs() > 1e-12) {
        bail!(Precondition, "coefficient a_{q} is nonzero below the stated rank {d}");
    }
    Ok(())
}

/// Σ_{k∈ℤ} ρ(k)^q for each requested q, summed to the first lag with
/// |ρ| < 1e−12 or to `MAX_LAG`, whichever comes first. For fBm the tail
/// past the cutoff K is estimated from ρ(r) ≈ H(2H − 1) r^{2H−2}.
fn rho_power_sums(spec: &StationaryGaussianSpec, powers: &[usize]) -> Vec<f64> {
    let mut sums = vec![1.0; powers.len()];
    let mut add = |rho: f64| {
        for (s, &q) in sums.iter_mut().zip(powers) {
            *s += 2.0 * rho.powi(q as i32);
        }
    };
    match &spec.family {
        CovarianceFamily::Iid => {}
        CovarianceFamily::Custom(v) => v[1..].iter().for_each(|&r| add(r)),
        CovarianceFamily::FbmIncrements(h) => {
            let mut last = 0;
            for r in 1..=MAX_LAG {
                let rho = fbm_rho(*h, r as i64);
                if rho.abs() < RHO_CUTOFF {
                    break;
                }
                add(rho);
                last = r;
            }
            if last == MAX_LAG {
                let c = h * (2.0 * h - 1.0);
                let k = last as f64 + 0.5;
                for (s, &q) in sums.iter_mut().zip(powers) {
                    let e = q as f64 * (2.0 * h - 2.0) + 1.0;
                    *s += 2.0 * c.powi(q as i32) * k.powf(e) / -e;
                }
            }
        }
    }
    sums
}

/// Σ|ρ(k)|^d < ∞, decided from the family.
fn summable(spec: &StationaryGaussianSpec, d: usize) -> bool {
    match &spec.family {
        CovarianceFamily::FbmIncrements(h) => *h == 0.5 || *h < 1.0 - 1.0 / (2.0 * d as f64),
        _ => true,
    }
}

/// σ² = Σ_{q≥d} q! a_q² Σ_{k∈ℤ} ρ(k)^q, the limiting variance of
/// V_n = n^{−1/2} Σ φ(X_k).
pub fn bm_sigma2(series: &CoefficientSeries, spec: &StationaryGaussianSpec, d: usize) -> Result<f64> {
    check_series(series, d)?;
    if !summable(spec, d) {
        return Err(Error::Summability {
            power: d as u32,
            detail: alloc::format!("sum of |rho(k)|^{d} diverges for {:?}", spec.family),
        });
    }
    let qs: Vec<usize> = (d..series.coeffs.len()).filter(|&q| series.coeffs[q] != 0.0).collect();
    let sums = rho_power_sums(spec, &qs);
    let s: f64 = qs
        .iter()
        .zip(&sums)
        .map(|(&q, s)| factorial(q) * series.coeffs[q].powi(2) * s)
        .sum();
    Ok(s.max(0.0))
}

/// E V_n² = Σ_q q! a_q² Σ_{|r|<n} ρ(r)^q (1 − |r|/n).
pub fn bm_variance_n(series: &CoefficientSeries, spec: &StationaryGaussianSpec) -> Result<f64> {
    check_series(series, 1)?;
    let n = spec.n as f64;
    let rho = spec.rho_row();
    let mut total = 0.0;
    for (q, &a) in series.coeffs.iter().enumerate().skip(1) {
        if a == 0.0 {
            continue;
        }
        let mut s = 1.0;
        for (r, &p) in rho.iter().enumerate().skip(1) {
            s += 2.0 * p.powi(q as i32) * (1.0 - r as f64 / n);
        }
        total += factorial(q) * a * a * s;
    }
    Ok(total)
}

/// Empirical law of V_n against N(0, σ²).
#[derive(Debug, Clone, PartialEq)]
pub struct BreuerMajorSimulation {
    pub sigma2: f64,
    pub variance_n: f64,
    pub distance: DistanceReport,
}

/// Simulates `paths` copies of V_n and measures the Kolmogorov distance to
/// the Breuer–Major limit, with a DKW band at level 1e−3.
pub fn bm_simulate<E: Executor>(
    series: &CoefficientSeries,
    spec: &StationaryGaussianSpec,
    d: usize,
    paths: usize,
    mc: &MonteCarlo<E>,
) -> Result<BreuerMajorSimulation> {
    let sigma2 = bm_sigma2(series, spec, d)?;
    if !(sigma2 > 0.0) {
        bail!(Precondition, "limit variance is zero, no normal limit to compare against");
    }
    let variance_n = bm_variance_n(series, spec)?;
    let sampler = StationarySampler::new(spec)?;
    let n = spec.n;
    let scale = 1.0 / (n as f64).sqrt();
    let vs = mc
        .run(paths, |rng, len| {
            let mut z = vec![0.0; n];
            let mut x = vec![0.0; n];
            (0..len)
                .map(|_| {
                    sampler.sample_into(rng, &mut z, &mut x);
                    scale * x.iter().map(|&v| series.eval(v)).sum::<f64>()
                })
                .collect::<Vec<f64>>()
        })
        .concat();
    let distance = empirical_kolmogorov(&vs, &Normal::new(0.0, sigma2.sqrt())?, 1e-3)?;
    Ok(BreuerMajorSimulation {
        sigma2,
        variance_n,
        distance,
    })
}

/// σ_n² = 2 Σ_{|r|<n} (n − |r|) ρ(r)² for the quadratic variation of fBm
/// increments.
pub fn qv_sigma_n_sq(h: f64, n: usize) -> Result<f64> {
    Ok(sigma_n_sq(&StationaryGaussianSpec::fbm(h, n)?.rho_row()))
}

fn sigma_n_sq(rho: &[f64]) -> f64 {
    let n = rho.len() as f64;
    let tail: f64 = rho.iter().enumerate().skip(1).map(|(r, p)| (n - r as f64) * p * p).sum();
    2.0 * (n + 2.0 * tail)
}

/// tr R³ and tr R⁴ from R² = R·R, computed in O(n²) by the Toeplitz
/// displacement recurrence: tr R³ = Σ (R²)_{ij} R_{ij}, tr R⁴ = ‖R²‖²_F.
pub fn toeplitz_traces(rho: &[f64]) -> (f64, f64) {
    let n = rho.len();
    let sq = toeplitz_square(rho);
    let mut t3 = 0.0;
    let mut t4 = 0.0;
    for i in 0..n {
        let row = sq.row(i);
        for (j, &v) in row.iter().enumerate() {
            t3 += v * rho[i.abs_diff(j)];
            t4 += v * v;
        }
    }
    (t3, t4)
}

fn check_matrix_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        bail!(Capability, "exact cumulants are limited to n <= {cap}, got {n}");
    }
    Ok(())
}

/// E F_n⁴ − 3 = 48 tr(R⁴)/σ_n⁴ with F_n = σ_n^{−1} Σ (X_k² − 1).
pub fn qv_fourth_cumulant_exact(h: f64, n: usize) -> Result<f64> {
    qv_fourth_cumulant_exact_capped(h, n, DEFAULT_MATRIX_CAP)
}

pub fn qv_fourth_cumulant_exact_capped(h: f64, n: usize, cap: usize) -> Result<f64> {
    check_matrix_cap(n, cap)?;
    let rho = StationaryGaussianSpec::fbm(h, n)?.rho_row();
    let s2 = sigma_n_sq(&rho);
    Ok(48.0 * toeplitz_traces(&rho).1 / (s2 * s2))
}

/// (48n/σ_n⁴)(Σ_{|k|<n} |ρ(k)|^{4/3})³.
pub fn qv_fourth_cumulant_bound(h: f64, n: usize) -> Result<f64> {
    let rho = StationaryGaussianSpec::fbm(h, n)?.rho_row();
    let s2 = sigma_n_sq(&rho);
    let s: f64 = 1.0 + 2.0 * rho[1..].iter().map(|p| p.abs().powf(4.0 / 3.0)).sum::<f64>();
    Ok(48.0 * n as f64 / (s2 * s2) * s.powi(3))
}

/// E F_n³ = 8 tr(R³)/σ_n³.
pub fn qv_third_moment(h: f64, n: usize) -> Result<f64> {
    check_matrix_cap(n, DEFAULT_MATRIX_CAP)?;
    third_moment_of(&StationaryGaussianSpec::fbm(h, n)?)
}

/// E F_n³ for any stationary covariance.
pub fn third_moment_of(spec: &StationaryGaussianSpec) -> Result<f64> {
    let rho = spec.rho_row();
    let s2 = sigma_n_sq(&rho);
    Ok(8.0 * toeplitz_traces(&rho).0 / s2.powf(1.5))
}

/// The order-2 kernel f_n = σ_n^{−1} Σ_k h_k ⊗ h_k with X = L Z, so
/// that F_n = I₂(f_n) in the chaos of Z. Intended for small n.
pub fn qv_chaos_kernel(spec: &StationaryGaussianSpec) -> Result<SymmetricKernel> {
    let l = spec.check_psd()?;
    let n = spec.n;
    let s = sigma_n_sq(&spec.rho_row()).sqrt();
    let m = Matrix::from_fn(n, |a, b| (0..n).map(|k| l.get(k, a) * l.get(k, b)).sum::<f64>() / s);
    SymmetricKernel::from_symmetric_matrix(&m)
}

/// One row of the quadratic-variation rate table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QVReport {
    pub hurst: f64,
    pub n: usize,
    pub sigma_n_sq: f64,
    pub fourth_cumulant_exact: f64,
    pub fourth_cumulant_bound: f64,
    pub third_moment: f64,
    /// max(E F⁴ − 3, |E F³|).
    pub m_stat: f64,
}

pub fn qv_report(h: f64, n: usize) -> Result<QVReport> {
    check_matrix_cap(n, DEFAULT_MATRIX_CAP)?;
    let rho = StationaryGaussianSpec::fbm(h, n)?.rho_row();
    let s2 = sigma_n_sq(&rho);
    let (t3, t4) = toeplitz_traces(&rho);
    let k4 = 48.0 * t4 / (s2 * s2);
    let m3 = 8.0 * t3 / s2.powf(1.5);
    Ok(QVReport {
        hurst: h,
        n,
        sigma_n_sq: s2,
        fourth_cumulant_exact: k4,
        fourth_cumulant_bound: qv_fourth_cumulant_bound(h, n)?,
        third_moment: m3,
        m_stat: k4.max(m3.abs()),
    })
}

/// Fitted log-log slopes for one Hurst index, next to the exponents the
/// rate theorems predict. Boundary cases with logarithmic corrections
/// have no single exponent and report `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSlope {
    pub hurst: f64,
    /// Slope of ln √(E F⁴ − 3) against ln n.
    pub cumulant_slope: f64,
    pub expected_cumulant_slope: Option<f64>,
    /// Slope of ln M(F_n) against ln n.
    pub m_slope: f64,
    pub expected_m_slope: Option<f64>,
    /// Smallest and largest (E F⁴ − 3)·ln n over the table, for H = ¾.
    pub log_scaled_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub rows: Vec<QVReport>,
    pub slopes: Vec<RateSlope>,
}

const BOUNDARY_TOL: f64 = 1e-12;

pub fn expected_cumulant_slope(h: f64) -> Option<f64> {
    if (h - 0.625).abs() < BOUNDARY_TOL || h >= 0.75 - BOUNDARY_TOL {
        None
    } else if h < 0.625 {
        Some(-0.5)
    } else {
        Some(4.0 * h - 3.0)
    }
}

pub fn expected_m_slope(h: f64) -> Option<f64> {
    if (h - 2.0 / 3.0).abs() < BOUNDARY_TOL || h >= 0.75 - BOUNDARY_TOL {
        None
    } else if h < 2.0 / 3.0 {
        Some(-0.5)
    } else {
        Some(6.0 * h - 4.5)
    }
}

/// Least-squares slope of y on x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn qv_rate_table(hs: &[f64], ns: &[usize]) -> Result<RateTable> {
    if ns.len() < 2 {
        bail!(InvalidArgument, "rate fits need at least two sequence lengths");
    }
    if let Some(&h) = hs.iter().find(|&&h| h > 0.75 + BOUNDARY_TOL) {
        return Err(Error::OutOfTheorem(h));
    }
    let mut rows = Vec::with_capacity(hs.len() * ns.len());
    let mut slopes = Vec::with_capacity(hs.len());
    let ln_n: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    for &h in hs {
        let block = ns.iter().map(|&n| qv_report(h, n)).collect::<Result<Vec<_>>>()?;
        let ln_k: Vec<f64> = block.iter().map(|r| 0.5 * r.fourth_cumulant_exact.ln()).collect();
        let ln_m: Vec<f64> = block.iter().map(|r| r.m_stat.ln()).collect();
        let log_scaled_range = ((h - 0.75).abs() < BOUNDARY_TOL).then(|| {
            block.iter().zip(&ln_n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (r, l)| {
                let v = r.fourth_cumulant_exact * l;
                (lo.min(v), hi.max(v))
            })
        });
        slopes.push(RateSlope {
            hurst: h,
            cumulant_slope: ls_slope(&ln_n, &ln_k),
            expected_cumulant_slope: expected_cumulant_slope(h),
            m_slope: ls_slope(&ln_n, &ln_m),
            expected_m_slope: expected_m_slope(h),
            log_scaled_range,
        });
        rows.extend(block);
    }
    Ok(RateTable { rows, slopes })
}
