//! Malliavin derivative, Ornstein–Uhlenbeck operators and the quantity
//! T = ⟨DF, −DL⁻¹F⟩ on finite chaos expansions, together with the
//! fourth-moment bounds built from them.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::string::String;
use alloc::vec::Vec;

use crate::chaos::{chaos_inner, contract, evaluate, moment, multiply, ChaosVector, GaussianPoint, SymmetricKernel};
use crate::distances::{empirical_kolmogorov, second_chaos_distribution, total_variation_density, Normal};
use crate::error::{bail, Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::mc::{Executor, MonteCarlo};
use crate::special::{binomial, factorial};
use crate::stein::{tv_bound_from_t1, T1Bound};

/// D_jF for every basis direction j.
pub type GradientVector = Vec<ChaosVector>;

/// D_jF = Σ_k k I_{k−1}(f_k(·, j)).
pub fn derivative(f: &ChaosVector) -> GradientVector {
    let n = f.basis_dim();
    (0..n)
        .map(|j| {
            let mut d = ChaosVector::constant(0.0, n);
            for k in f.kernels() {
                let fixed = k.fix_slot(j);
                if fixed.nnz() > 0 {
                    d.add_kernel(fixed, k.order() as f64)
                        .expect("fixed slot keeps the basis dimension");
                }
            }
            d
        })
        .collect()
}

/// L F: the order-k component scaled by −k.
pub fn ou_generator(f: &ChaosVector) -> ChaosVector {
    f.map_orders(0.0, |k| -(k as f64))
}

/// L⁻¹ F: the order-k component scaled by −1/k, constant dropped.
pub fn ou_pseudo_inverse(f: &ChaosVector) -> ChaosVector {
    f.map_orders(0.0, |k| -1.0 / k as f64)
}

/// T = Σ_j D_jF · (−D_jL⁻¹F), exactly.
pub fn gamma_t(f: &ChaosVector) -> Result<ChaosVector> {
    let df = derivative(f);
    let dl = derivative(&ou_pseudo_inverse(f));
    let mut t = ChaosVector::constant(0.0, f.basis_dim());
    for (a, b) in df.iter().zip(&dl) {
        if a.kernels().next().is_none() && a.mean() == 0.0 {
            continue;
        }
        t = t.add_scaled(&multiply(a, b)?, -1.0)?;
    }
    Ok(t)
}

/// Two sides of an identity and their discrepancy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualityReport {
    pub lhs: f64,
    pub rhs: f64,
}

impl EqualityReport {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    /// Discrepancy relative to max(1, |lhs|, |rhs|).
    pub fn relative(&self) -> f64 {
        self.discrepancy() / self.lhs.abs().max(self.rhs.abs()).max(1.0)
    }
}

/// E[(LF) G] against −Σ_j E[D_jF D_jG].
pub fn integration_by_parts_check(f: &ChaosVector, g: &ChaosVector) -> Result<EqualityReport> {
    let lhs = chaos_inner(&ou_generator(f), g)?;
    let df = derivative(f);
    let dg = derivative(g);
    let mut rhs = 0.0;
    for (a, b) in df.iter().zip(&dg) {
        rhs -= chaos_inner(a, b)?;
    }
    Ok(EqualityReport { lhs, rhs })
}

/// p(F) for p(x) = Σ c_i x^i, by Horner's rule in the chaos algebra.
pub fn polynomial_of(coeffs: &[f64], f: &ChaosVector) -> Result<ChaosVector> {
    let n = f.basis_dim();
    let mut acc = ChaosVector::constant(*coeffs.last().unwrap_or(&0.0), n);
    for &c in coeffs.iter().rev().skip(1) {
        acc = multiply(&acc, f)?.add_scaled(&ChaosVector::constant(c, n), 1.0)?;
    }
    Ok(acc)
}

/// E[(F − EF) p(F)] against E[p′(F) T] for a polynomial p.
pub fn stein_identity_check(f: &ChaosVector, coeffs: &[f64]) -> Result<EqualityReport> {
    let centered = f.add_scaled(&ChaosVector::constant(f.mean(), f.basis_dim()), -1.0)?;
    let pf = polynomial_of(coeffs, f)?;
    let deriv: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect();
    let dpf = polynomial_of(&deriv, f)?;
    let t = gamma_t(f)?;
    Ok(EqualityReport {
        lhs: chaos_inner(&centered, &pf)?,
        rhs: chaos_inner(&dpf, &t)?,
    })
}

/// ‖f ⊗̃_r f‖².
pub fn contraction_norm_sq(f: &SymmetricKernel, r: usize) -> Result<f64> {
    Ok(contract(f, f, r)?.symmetrize().norm_sq())
}

/// Var T for F = I_k(f):
/// Σ_{r=1}^{k−1} (r²/k²)(r!)² C(k,r)⁴ (2k−2r)! ‖f ⊗̃_r f‖².
pub fn variance_t_formula(f: &SymmetricKernel) -> Result<f64> {
    let k = f.order();
    let kf = k as f64;
    let mut s = 0.0;
    for r in 1..k {
        let rf = r as f64;
        s += rf * rf / (kf * kf)
            * factorial(r).powi(2)
            * binomial(k, r).powi(4)
            * factorial(2 * k - 2 * r)
            * contraction_norm_sq(f, r)?;
    }
    Ok(s)
}

/// E F⁴ for F = I_k(f):
/// 3(E F²)² + (3/k) Σ_{r=1}^{k−1} r (r!)² C(k,r)⁴ (2k−2r)! ‖f ⊗̃_r f‖².
pub fn fourth_moment_identity(f: &SymmetricKernel) -> Result<f64> {
    let k = f.order();
    let var = factorial(k) * f.norm_sq();
    let mut s = 0.0;
    for r in 1..k {
        s += r as f64
            * factorial(r).powi(2)
            * binomial(k, r).powi(4)
            * factorial(2 * k - 2 * r)
            * contraction_norm_sq(f, r)?;
    }
    Ok(3.0 * var * var + 3.0 / k as f64 * s)
}

/// A computed quantity against its proven cap. Negative slack is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub quantity: f64,
    pub cap: f64,
    pub slack: f64,
    /// Numerical or statistical uncertainty of `quantity`.
    pub error: f64,
    pub method: String,
}

impl BoundReport {
    fn new(quantity: f64, cap: f64, error: f64, method: &str) -> Self {
        Self {
            quantity,
            cap,
            slack: cap - quantity,
            error,
            method: String::from(method),
        }
    }
}

/// Fourth moment theorem report for a unit-variance F = I_k(f).
#[derive(Debug, Clone, PartialEq)]
pub struct FourthMomentReport {
    pub bound: BoundReport,
    pub fourth_moment: f64,
    pub variance_t: f64,
    /// ((k−1)/3k)(E F⁴ − 3), which dominates Var T.
    pub variance_t_cap: f64,
}

/// Eigenvalues of an order-2 kernel viewed as a symmetric matrix, with
/// exact zeros (relative 1e−13) removed. I₂(f) = Σ λ_j (Z_j² − 1) in law.
pub fn kernel_eigenvalues(f: &SymmetricKernel) -> Result<Vec<f64>> {
    let ev = symmetric_eigenvalues(&f.to_matrix()?)?;
    let scale = ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(ev.into_iter().filter(|v| v.abs() > 1e-13 * scale).collect())
}

/// d_TV(F, N(0,1)) ≤ 2√((k−1)/3k) √(E F⁴ − 3).
///
/// For k = 2 the distance is computed from the exact law (eigenvalues and
/// characteristic function inversion). For k ≥ 3 only the Kolmogorov
/// distance of `samples` Monte Carlo draws is available, reported as the
/// lower bound max(0, d̂_K − DKW) on d_TV.
pub fn fourth_moment_tv_bound<E: Executor>(
    f: &SymmetricKernel,
    mc: &MonteCarlo<E>,
    samples: usize,
) -> Result<FourthMomentReport> {
    let k = f.order();
    let var = factorial(k) * f.norm_sq();
    if (var - 1.0).abs() > 1e-9 {
        bail!(Precondition, "fourth moment theorem needs E F^2 = 1, got {var}");
    }
    let m4 = fourth_moment_identity(f)?;
    if m4 < 3.0 - 1e-9 {
        bail!(Evaluation, "E F^4 = {m4} < 3 is impossible for a chaos element");
    }
    let kf = k as f64;
    let excess = (m4 - 3.0).max(0.0);
    let cap = 2.0 * ((kf - 1.0) / (3.0 * kf)).sqrt() * excess.sqrt();
    let variance_t = variance_t_formula(f)?;
    let variance_t_cap = (kf - 1.0) / (3.0 * kf) * excess;
    let bound = match k {
        1 => BoundReport::new(0.0, cap, 0.0, "first chaos is exactly normal"),
        2 => {
            let law = second_chaos_distribution(&kernel_eigenvalues(f)?)?;
            let tv = total_variation_density(&law, &Normal::STANDARD)?;
            BoundReport::new(tv.value, cap, tv.error_bound, "total variation from the inverted second-chaos law")
        }
        _ => {
            let fv = ChaosVector::single(f.clone())?;
            let n = f.basis_dim();
            let xs = mc.collect(samples, |rng| evaluate(&fv, &GaussianPoint::sample(n, rng)).unwrap_or(f64::NAN));
            let dk = empirical_kolmogorov(&xs, &Normal::STANDARD, 0.01)?;
            BoundReport::new(
                (dk.value - dk.error_bound).max(0.0),
                cap,
                dk.error_bound,
                "Kolmogorov lower bound from samples",
            )
        }
    };
    Ok(FourthMomentReport {
        bound,
        fourth_moment: m4,
        variance_t,
        variance_t_cap,
    })
}

/// The d_TV bound through T = ⟨DF, −DL⁻¹F⟩, whose conditional mean enters
/// as 2E|1 − E[T|F]| and, at unit variance, 2√Var E[T|F].
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalVarianceReport {
    /// E T, which equals E F² for centered F.
    pub mean_t: f64,
    pub variance_t: f64,
    /// 2√Var T, a rigorous cap on 2√Var E[T|F].
    pub conservative_cap: f64,
    /// Binned estimates of 2E|1 − E[T|F]| and 2√Var E[T|F]; `None` when F
    /// is almost surely constant on the sampled points.
    pub binned: Option<T1Bound>,
}

pub fn tv_bound_conditional_variance<E: Executor>(f: &ChaosVector, samples: usize, mc: &MonteCarlo<E>) -> Result<ConditionalVarianceReport> {
    let t = gamma_t(f)?;
    let mean_t = t.mean();
    let variance_t = (chaos_inner(&t, &t)? - mean_t * mean_t).max(0.0);
    let n = f.basis_dim();
    let pairs = mc.collect(samples, |rng| {
        let z = GaussianPoint::sample(n, rng);
        (evaluate(f, &z).unwrap_or(f64::NAN), evaluate(&t, &z).unwrap_or(f64::NAN))
    });
    let binned = match tv_bound_from_t1(&pairs, 50) {
        Ok(b) => Some(b),
        Err(Error::DegenerateBinning) => None,
        Err(e) => return Err(e),
    };
    Ok(ConditionalVarianceReport {
        mean_t,
        variance_t,
        conservative_cap: 2.0 * variance_t.sqrt(),
        binned,
    })
}

/// M(F) = max{E F⁴ − 3, |E F³|} for F = I_k(f).
pub fn m_statistic(f: &SymmetricKernel) -> Result<f64> {
    let m4 = fourth_moment_identity(f)?;
    let m3 = moment(&ChaosVector::single(f.clone())?, 3)?;
    Ok((m4 - 3.0).max(m3.abs()))
}
