//! Probabilists' Hermite polynomials, Gauss–Hermite quadrature against the
//! standard normal weight, and Hermite expansions of functions in L²(γ).

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::linalg::tridiagonal_eigen;
use crate::special::factorial;

/// Highest degree accepted by [`hermite_eval`].
pub const MAX_DEGREE: usize = 64;

/// Default cutoff below which expansion coefficients are zeroed.
pub const COEFFICIENT_TOL: f64 = 1e-12;

/// Default tolerance of [`hermite_rank`].
pub const RANK_TOL: f64 = 1e-10;

/// H_k(x) by H_{k+1} = x H_k − k H_{k−1}.
pub fn hermite_eval(k: usize, x: f64) -> Result<f64> {
    if k > MAX_DEGREE {
        bail!(Capability, "hermite degree {k} exceeds {MAX_DEGREE}");
    }
    Ok(hermite_table(k, x)[k])
}

/// [H_0(x), …, H_k(x)]. No degree guard; callers bound `k`.
pub fn hermite_table(k: usize, x: f64) -> Vec<f64> {
    let mut h = vec![1.0; k + 1];
    if k >= 1 {
        h[1] = x;
    }
    for j in 1..k {
        h[j + 1] = x * h[j] - j as f64 * h[j - 1];
    }
    h
}

/// m-point Gauss rule for ∫ g(x) φ(x) dx with φ the N(0,1) density.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn expect(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum()
    }
}

/// Golub–Welsch: eigenvalues of the Jacobi matrix of the probabilists'
/// Hermite recurrence (zero diagonal, off-diagonal √k) are the nodes, and
/// squared first eigenvector components are the weights.
pub fn gauss_hermite_rule(m: usize) -> Result<GaussRule> {
    if !(2..=256).contains(&m) {
        bail!(InvalidArgument, "rule size {m} outside [2, 256]");
    }
    let mut diag = vec![0.0; m];
    let mut off: Vec<f64> = (1..=m).map(|k| (k as f64).sqrt()).collect();
    off[m - 1] = 0.0;
    let mut first = vec![0.0; m];
    first[0] = 1.0;
    tridiagonal_eigen(&mut diag, &mut off, Some(&mut first))?;
    let mut pairs: Vec<(f64, f64)> = diag.into_iter().zip(first.into_iter().map(|z| z * z)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Symmetrize to kill rounding asymmetry; the rule is symmetric about 0.
    let n = pairs.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Ok(GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    })
}

/// Truncated Hermite expansion φ ≈ Σ_{q≤Q} a_q H_q.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSeries {
    pub coeffs: Vec<f64>,
    /// L²(γ) mass of φ not captured by the kept coefficients.
    pub tail_bound: f64,
}

impl CoefficientSeries {
    /// Exact series from known coefficients (no tail).
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        Self {
            coeffs,
            tail_bound: 0.0,
        }
    }

    /// The series of H_q alone.
    pub fn hermite(q: usize) -> Self {
        let mut c = vec![0.0; q + 1];
        c[q] = 1.0;
        Self::from_coeffs(c)
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Σ q! a_q², the L²(γ) norm captured by the series.
    pub fn captured_norm_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(q, a)| factorial(q) * a * a)
            .sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let h = hermite_table(self.truncation_order(), x);
        self.coeffs.iter().zip(&h).map(|(a, h)| a * h).sum()
    }
}

/// a_q = E[φ(Z) H_q(Z)] / q! for q ≤ Q by a 200-point Gauss–Hermite rule
/// (exact for polynomial φ with deg φ + Q ≤ 399). Coefficients below `tol`
/// are zeroed; the L²(γ) norm deficit goes to `tail_bound`.
pub fn chaos_coefficients(phi: impl Fn(f64) -> f64, q_max: usize, tol: f64) -> Result<CoefficientSeries> {
    if q_max > MAX_DEGREE {
        bail!(Capability, "truncation order {q_max} exceeds {MAX_DEGREE}");
    }
    let rule = gauss_hermite_rule(200)?;
    let mut sums = vec![0.0; q_max + 1];
    let mut norm_sq = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = phi(x);
        if !v.is_finite() {
            bail!(Evaluation, "phi({x}) is not finite");
        }
        norm_sq += w * v * v;
        for (s, h) in sums.iter_mut().zip(hermite_table(q_max, x)) {
            *s += w * v * h;
        }
    }
    let coeffs: Vec<f64> = sums
        .iter()
        .enumerate()
        .map(|(q, s)| {
            let a = s / factorial(q);
            if a.abs() < tol {
                0.0
            } else {
                a
            }
        })
        .collect();
    let mut series = CoefficientSeries {
        coeffs,
        tail_bound: 0.0,
    };
    let deficit = norm_sq - series.captured_norm_sq();
    series.tail_bound = if deficit.abs() <= 1e-9 * norm_sq.max(1.0) {
        0.0
    } else {
        deficit.max(0.0)
    };
    Ok(series)
}

/// Smallest q with |a_q| > tol.
pub fn hermite_rank(series: &CoefficientSeries, tol: f64) -> Result<usize> {
    series
        .coeffs
        .iter()
        .position(|a| a.abs() > tol)
        .ok_or(Error::UndefinedRank { tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite_eval(0, 3.7).unwrap(), 1.0);
        assert_eq!(hermite_eval(2, 1.0).unwrap(), 0.0);
        assert_eq!(hermite_eval(3, 2.0).unwrap(), 2.0);
        assert!(matches!(hermite_eval(65, 0.1), Err(Error::Capability(_))));
    }

    #[test]
    fn two_point_rule() {
        let r = gauss_hermite_rule(2).unwrap();
        assert!((r.nodes[0] + 1.0).abs() < 1e-15 && (r.nodes[1] - 1.0).abs() < 1e-15);
        assert!((r.weights[0] - 0.5).abs() < 1e-15 && (r.weights[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rules_normalized_and_exact() {
        for m in [2, 3, 7, 20, 64, 128, 256] {
            let r = gauss_hermite_rule(m).unwrap();
            let w: f64 = r.weights.iter().sum();
            assert!((w - 1.0).abs() < 1e-13, "m={m}");
            assert!((r.expect(|x| x * x) - 1.0).abs() < 1e-11, "m={m}");
            if m >= 3 {
                assert!((r.expect(|x| x.powi(4)) - 3.0).abs() < 1e-10, "m={m}");
            }
        }
        assert!(gauss_hermite_rule(1).is_err());
        assert!(gauss_hermite_rule(257).is_err());
    }

    #[test]
    fn orthogonality() {
        let r = gauss_hermite_rule(20).unwrap();
        for p in 0..=8 {
            for q in 0..=8 {
                let v = r.expect(|x| {
                    let h = hermite_table(8, x);
                    h[p] * h[q]
                });
                let want = if p == q { factorial(p) } else { 0.0 };
                assert!((v - want).abs() < 1e-10 * want.max(1.0), "p={p} q={q} v={v}");
            }
        }
    }

    #[test]
    fn expansion_examples() {
        let s = chaos_coefficients(|x| x * x - 1.0, 4, COEFFICIENT_TOL).unwrap();
        assert!((s.coeffs[2] - 1.0).abs() < 1e-12);
        assert!(s.coeffs.iter().enumerate().all(|(q, c)| q == 2 || *c == 0.0));

        let s = chaos_coefficients(|x| x * x * x, 4, COEFFICIENT_TOL).unwrap();
        assert!((s.coeffs[1] - 3.0).abs() < 1e-12 && (s.coeffs[3] - 1.0).abs() < 1e-12);
        assert_eq!(hermite_rank(&s, RANK_TOL).unwrap(), 1);

        let s = chaos_coefficients(|x| hermite_table(5, x)[5], 3, COEFFICIENT_TOL).unwrap();
        assert!((s.tail_bound - 120.0).abs() < 1e-8, "{}", s.tail_bound);
        assert!(matches!(hermite_rank(&s, RANK_TOL), Err(Error::UndefinedRank { .. })));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(hermite_rank(&CoefficientSeries::hermite(2), RANK_TOL).unwrap(), 2);
        assert_eq!(hermite_rank(&CoefficientSeries::from_coeffs(vec![0.3, 1.0]), RANK_TOL).unwrap(), 0);
    }

    #[test]
    fn non_finite_phi() {
        assert!(matches!(chaos_coefficients(|x| if x > 5.0 { f64::NAN } else { x }, 3, 1e-12), Err(Error::Evaluation(_))));
    }
}
