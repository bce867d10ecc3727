//! Small dense linear algebra: symmetric eigenvalues, Cholesky, and products
//! of symmetric Toeplitz matrices.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    /// Symmetric Toeplitz matrix with first row `rho`.
    pub fn toeplitz(rho: &[f64]) -> Self {
        Self::from_fn(rho.len(), |i, j| rho[i.abs_diff(j)])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            let orow = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Σ_ij A_ij B_ij = tr(A Bᵀ).
    pub fn frobenius_dot(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }
}

/// Lower Cholesky factor L with A = L Lᵀ. Zero pivots (down to a relative
/// 1e−12 of the diagonal) are accepted as semidefinite directions.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.dim();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        let scale = a.get(j, j).abs().max(1.0);
        if d < -1e-10 * scale {
            return Err(Error::NotPositiveSemidefinite { pivot: j });
        }
        let pivot = if d > 1e-12 * scale { d.sqrt() } else { 0.0 };
        l.set(j, j, pivot);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, if pivot > 0.0 { s / pivot } else { 0.0 });
        }
    }
    Ok(l)
}

/// Eigenvalues of a symmetric tridiagonal matrix (implicit QL with Wilkinson
/// shifts). When `first` is supplied it must hold the first row of the
/// identity on entry and returns the first components of the normalized
/// eigenvectors.
pub fn tridiagonal_eigen(diag: &mut [f64], off: &mut [f64], mut first: Option<&mut [f64]>) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    // off[i] couples i and i+1; shift to the NR convention e[i] couples i-1, i.
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[..n - 1]);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Evaluation("tridiagonal QL did not converge".into()));
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = first.as_deref_mut() {
                    let zf = z[i + 1];
                    z[i + 1] = s * z[i] + c * zf;
                    z[i] = c * z[i] - s * zf;
                }
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    off.iter_mut().for_each(|x| *x = 0.0);
    Ok(())
}

/// Eigenvalues of a dense symmetric matrix, ascending (Householder
/// tridiagonalization followed by implicit QL).
#[allow(clippy::needless_range_loop)]
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    let n = a.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut m = a.clone();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        // Reflect column k below the diagonal onto e_{k+1}.
        let alpha_sq: f64 = (k + 1..n).map(|i| m.get(i, k) * m.get(i, k)).sum();
        let alpha = -alpha_sq.sqrt().copysign(m.get(k + 1, k));
        if alpha_sq == 0.0 {
            continue;
        }
        let mut v = vec![0.0; n];
        v[k + 1] = m.get(k + 1, k) - alpha;
        for i in k + 2..n {
            v[i] = m.get(i, k);
        }
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        // A ← H A H with H = I − 2vvᵀ/|v|²
        let mut p = vec![0.0; n];
        for i in k..n {
            p[i] = (k + 1..n).map(|j| m.get(i, j) * v[j]).sum::<f64>() * 2.0 / vnorm_sq;
        }
        let kf: f64 = (k + 1..n).map(|i| v[i] * p[i]).sum::<f64>() / vnorm_sq;
        let q: Vec<f64> = (0..n).map(|i| p[i] - kf * v[i]).collect();
        for i in k..n {
            for j in k..n {
                let upd = m.get(i, j) - v[i] * q[j] - q[i] * v[j];
                m.set(i, j, upd);
            }
        }
    }
    for i in 0..n {
        diag[i] = m.get(i, i);
        if i + 1 < n {
            off[i] = m.get(i + 1, i);
        }
    }
    tridiagonal_eigen(&mut diag, &mut off, None)?;
    diag.sort_by(f64::total_cmp);
    Ok(diag)
}

/// R² for the symmetric Toeplitz matrix R with first row `rho`, by the
/// displacement recurrence
/// (R²)_{i+1,j+1} = (R²)_{ij} + ρ(i+1)ρ(j+1) − ρ(n−1−i)ρ(n−1−j),
/// which costs O(n²) instead of O(n³).
pub fn toeplitz_square(rho: &[f64]) -> Matrix {
    let n = rho.len();
    let mut out = Matrix::zeros(n);
    // First row: (R²)_{0j} = Σ_k ρ(k) ρ(|k−j|).
    for j in 0..n {
        let s: f64 = (0..n).map(|k| rho[k] * rho[k.abs_diff(j)]).sum();
        out.set(0, j, s);
        out.set(j, 0, s);
    }
    for i in 0..n - 1 {
        for j in i..n - 1 {
            let v = out.get(i, j) + rho[i + 1] * rho[j + 1] - rho[n - 1 - i] * rho[n - 1 - j];
            out.set(i + 1, j + 1, v);
            out.set(j + 1, i + 1, v);
        }
    }
    out
}
