//! Finite-dimensional Wiener chaos.
//!
//! The Gaussian space is spanned by `n` orthonormal directions with
//! coordinates `Z_0 … Z_{n−1}` (i.i.d. standard normal). A symmetric kernel
//! of order `p` is stored by its sorted multi-indices only; `I_p(f)` is the
//! Hermite polynomial
//!
//! ```text
//! I_p(f) = Σ_α m(α) f_α Π_j H_{c_j(α)}(Z_j)
//! ```
//!
//! where `m(α)` counts the distinct orderings of `α` and `c_j(α)` is the
//! number of times `j` occurs in `α`. Basis indices are zero-based here;
//! the JSON kernel format of the companion crate is one-based.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{bail, Error, Result};
use crate::hermite::hermite_table;
use crate::mc::{Estimate, Executor, MonteCarlo, Moments};
use crate::special::{binomial, factorial};

/// Largest chaos order any vector may carry.
pub const MAX_ORDER: usize = 32;

/// Nondecreasing sequence of basis indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u16>);

impl MultiIndex {
    /// Sorts `entries` into canonical form.
    pub fn new(entries: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<u16> = entries.into_iter().map(|i| i as u16).collect();
        v.sort_unstable();
        MultiIndex(v)
    }

    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i as usize)
    }

    /// (basis index, count) pairs in increasing index order.
    pub fn profile(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &i in &self.0 {
            match out.last_mut() {
                Some((j, c)) if *j == i as usize => *c += 1,
                _ => out.push((i as usize, 1)),
            }
        }
        out
    }

    /// Number of distinct orderings, p!/Π c_j!.
    pub fn multiplicity(&self) -> f64 {
        self.profile()
            .iter()
            .fold(factorial(self.order()), |acc, &(_, c)| acc / factorial(c))
    }

    /// Multiset union.
    pub fn union(&self, other: &MultiIndex) -> MultiIndex {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        v.sort_unstable();
        MultiIndex(v)
    }

    /// Removes one occurrence of `j`, if present.
    pub fn remove_one(&self, j: usize) -> Option<MultiIndex> {
        let pos = self.0.iter().position(|&i| i as usize == j)?;
        let mut v = self.0.clone();
        v.remove(pos);
        Some(MultiIndex(v))
    }

    /// Every distinct split of the multiset into (taken of size `r`, rest).
    pub fn splits(&self, r: usize) -> Vec<(MultiIndex, MultiIndex)> {
        let profile = self.profile();
        let mut out = Vec::new();
        let mut take = vec![0usize; profile.len()];
        fn rec(
            profile: &[(usize, usize)],
            k: usize,
            left: usize,
            take: &mut Vec<usize>,
            out: &mut Vec<(MultiIndex, MultiIndex)>,
        ) {
            if k == profile.len() {
                if left == 0 {
                    let mut a = Vec::new();
                    let mut b = Vec::new();
                    for (&(idx, c), &t) in profile.iter().zip(take.iter()) {
                        a.extend(core::iter::repeat_n(idx as u16, t));
                        b.extend(core::iter::repeat_n(idx as u16, c - t));
                    }
                    out.push((MultiIndex(a), MultiIndex(b)));
                }
                return;
            }
            let remaining: usize = profile[k..].iter().map(|p| p.1).sum();
            if remaining < left {
                return;
            }
            for t in 0..=profile[k].1.min(left) {
                take[k] = t;
                rec(profile, k + 1, left - t, take, out);
            }
            take[k] = 0;
        }
        rec(&profile, 0, r, &mut take, &mut out);
        out
    }
}

/// Order-`p` symmetric coefficient tensor over an `n`-element basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricKernel {
    order: usize,
    basis_dim: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl SymmetricKernel {
    pub fn zero(order: usize, basis_dim: usize) -> Self {
        Self {
            order,
            basis_dim,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds a kernel from (index, value) pairs; indices are sorted and
    /// repeated entries summed. Exact zeros are dropped.
    pub fn from_entries(
        order: usize,
        basis_dim: usize,
        entries: impl IntoIterator<Item = (Vec<usize>, f64)>,
    ) -> Result<Self> {
        let mut k = Self::zero(order, basis_dim);
        for (idx, v) in entries {
            if idx.len() != order {
                return Err(Error::DimensionMismatch {
                    expected: order,
                    got: idx.len(),
                });
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= basis_dim) {
                bail!(InvalidArgument, "basis index {bad} out of range for dimension {basis_dim}");
            }
            *k.coeffs.entry(MultiIndex::new(idx)).or_insert(0.0) += v;
        }
        k.prune();
        Ok(k)
    }

    /// (e_i)^{⊗p}.
    pub fn basis_power(i: usize, order: usize, basis_dim: usize) -> Result<Self> {
        Self::from_entries(order, basis_dim, [(vec![i; order], 1.0)])
    }

    /// Kernel of order 2 from a symmetric matrix A (f_{ij} = A_ij).
    pub fn from_symmetric_matrix(a: &crate::linalg::Matrix) -> Result<Self> {
        let n = a.dim();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i..n {
                entries.push((vec![i, j], 0.5 * (a.get(i, j) + a.get(j, i))));
            }
        }
        Self::from_entries(2, n, entries)
    }

    /// The n×n matrix of an order-2 kernel.
    pub fn to_matrix(&self) -> Result<crate::linalg::Matrix> {
        if self.order != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.order,
            });
        }
        let mut m = crate::linalg::Matrix::zeros(self.basis_dim);
        for (idx, &v) in &self.coeffs {
            let e: Vec<usize> = idx.entries().collect();
            m.set(e[0], e[1], v);
            m.set(e[1], e[0], v);
        }
        Ok(m)
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, v| *v != 0.0);
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn basis_dim(&self) -> usize {
        self.basis_dim
    }

    pub fn get(&self, idx: &MultiIndex) -> f64 {
        self.coeffs.get(idx).copied().unwrap_or(0.0)
    }

    /// Stored (sorted index, value) pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(k, &v)| (k, v))
    }

    pub fn nnz(&self) -> usize {
        self.coeffs.len()
    }

    /// Σ_α m(α) f_α g_α, the L² inner product of the full tensors.
    pub fn inner(&self, other: &SymmetricKernel) -> f64 {
        let (small, large) = if self.nnz() <= other.nnz() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .coeffs
            .iter()
            .filter_map(|(k, &v)| large.coeffs.get(k).map(|&w| k.multiplicity() * v * w))
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|(k, &v)| k.multiplicity() * v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.values_mut().for_each(|v| *v *= c);
        out.prune();
        out
    }

    /// In-place `self += c·other`.
    pub fn add_scaled(&mut self, other: &SymmetricKernel, c: f64) -> Result<()> {
        self.check_compatible(other)?;
        for (k, &v) in &other.coeffs {
            *self.coeffs.entry(k.clone()).or_insert(0.0) += c * v;
        }
        self.prune();
        Ok(())
    }

    fn check_compatible(&self, other: &SymmetricKernel) -> Result<()> {
        if self.basis_dim != other.basis_dim {
            return Err(Error::DimensionMismatch {
                expected: self.basis_dim,
                got: other.basis_dim,
            });
        }
        if self.order != other.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                got: other.order,
            });
        }
        Ok(())
    }

    /// f(·, j): the order p−1 kernel with one slot fixed to `j`.
    pub fn fix_slot(&self, j: usize) -> SymmetricKernel {
        let mut out = SymmetricKernel::zero(self.order.saturating_sub(1), self.basis_dim);
        for (k, &v) in &self.coeffs {
            if let Some(rest) = k.remove_one(j) {
                out.coeffs.insert(rest, v);
            }
        }
        out
    }

    /// Value of the full (unsorted) tensor at `idx`.
    pub fn at(&self, idx: &[usize]) -> f64 {
        self.get(&MultiIndex::new(idx.iter().copied()))
    }

    /// Σ_α m(α) f_α Π_j H_{c_j}(Z_j) given per-coordinate Hermite tables.
    fn eval_with(&self, tables: &[Vec<f64>]) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, &v)| {
                let h: f64 = k.profile().iter().map(|&(j, c)| tables[j][c]).product();
                k.multiplicity() * v * h
            })
            .sum()
    }
}

/// Tensor of order `p` over `[n]^p` in plain coordinates, as produced by
/// tensor products and contractions before symmetrization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    pub order: usize,
    pub basis_dim: usize,
    pub entries: BTreeMap<Vec<usize>, f64>,
}

impl RawTensor {
    pub fn new(order: usize, basis_dim: usize) -> Self {
        Self {
            order,
            basis_dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum()
    }
}

/// Averages `raw` over all permutations of its arguments.
pub fn symmetrize(raw: &RawTensor) -> Result<SymmetricKernel> {
    let mut sums: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for (idx, &v) in &raw.entries {
        if idx.len() != raw.order {
            return Err(Error::DimensionMismatch {
                expected: raw.order,
                got: idx.len(),
            });
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= raw.basis_dim) {
            bail!(InvalidArgument, "basis index {bad} out of range for dimension {}", raw.basis_dim);
        }
        *sums.entry(MultiIndex::new(idx.iter().copied())).or_insert(0.0) += v;
    }
    // (1/p!) Σ_σ raw(σα) = (1/m(α)) Σ over the distinct orderings of α.
    let mut out = SymmetricKernel::zero(raw.order, raw.basis_dim);
    for (k, s) in sums {
        let m = k.multiplicity();
        out.coeffs.insert(k, s / m);
    }
    out.prune();
    Ok(out)
}

/// The r-th contraction of two symmetric kernels.
///
/// The result is symmetric within its first `p−r` and within its last
/// `q−r` arguments, so it is stored by pairs of sorted indices:
/// `(f ⊗_r g)(s, t) = B(sort s, sort t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Contraction {
    left_order: usize,
    right_order: usize,
    basis_dim: usize,
    blocks: BTreeMap<(MultiIndex, MultiIndex), f64>,
}

impl Contraction {
    pub fn order(&self) -> usize {
        self.left_order + self.right_order
    }

    pub fn basis_dim(&self) -> usize {
        self.basis_dim
    }

    /// L² norm squared of the unsymmetrized tensor.
    pub fn norm_sq(&self) -> f64 {
        self.blocks
            .iter()
            .map(|((a, b), &v)| a.multiplicity() * b.multiplicity() * v * v)
            .sum()
    }

    /// The full-coordinate tensor; exponential in the order, meant for tests
    /// and small cases.
    pub fn to_raw(&self) -> RawTensor {
        let mut raw = RawTensor::new(self.order(), self.basis_dim);
        for ((a, b), &v) in &self.blocks {
            for pa in orderings(a) {
                for pb in orderings(b) {
                    let mut idx = pa.clone();
                    idx.extend_from_slice(&pb);
                    raw.entries.insert(idx, v);
                }
            }
        }
        raw
    }

    /// f ⊗̃_r g.
    pub fn symmetrize(&self) -> SymmetricKernel {
        let mut out = SymmetricKernel::zero(self.order(), self.basis_dim);
        for ((a, b), &v) in &self.blocks {
            let w = a.multiplicity() * b.multiplicity() * v;
            *out.coeffs.entry(a.union(b)).or_insert(0.0) += w;
        }
        for (k, v) in out.coeffs.iter_mut() {
            *v /= k.multiplicity();
        }
        out.prune();
        out
    }

    /// Full contraction (order 0) as a scalar.
    pub fn scalar(&self) -> f64 {
        self.blocks
            .get(&(MultiIndex::empty(), MultiIndex::empty()))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Distinct orderings of a sorted multi-index.
fn orderings(k: &MultiIndex) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = k.entries().collect();
    // Lexicographic next_permutation from the sorted start.
    loop {
        out.push(cur.clone());
        let n = cur.len();
        if n < 2 {
            break;
        }
        let mut i = n - 1;
        while i > 0 && cur[i - 1] >= cur[i] {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let mut j = n - 1;
        while cur[j] <= cur[i - 1] {
            j -= 1;
        }
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// f ⊗_r g, summing over the `r` shared arguments.
///
/// Coefficients of each kernel are grouped by the contracted sub-multiset
/// γ, then joined on γ; an ordered r-tuple realizes γ in m(γ) ways.
pub fn contract(f: &SymmetricKernel, g: &SymmetricKernel, r: usize) -> Result<Contraction> {
    if f.basis_dim != g.basis_dim {
        return Err(Error::DimensionMismatch {
            expected: f.basis_dim,
            got: g.basis_dim,
        });
    }
    if r > f.order.min(g.order) {
        bail!(InvalidArgument, "contraction index {r} exceeds min order {}", f.order.min(g.order));
    }
    let group = |k: &SymmetricKernel| {
        let mut by: BTreeMap<MultiIndex, Vec<(MultiIndex, f64)>> = BTreeMap::new();
        for (idx, &v) in &k.coeffs {
            for (gamma, rest) in idx.splits(r) {
                by.entry(gamma).or_default().push((rest, v));
            }
        }
        by
    };
    let gf = group(f);
    let gg = group(g);
    let mut blocks: BTreeMap<(MultiIndex, MultiIndex), f64> = BTreeMap::new();
    for (gamma, lefts) in &gf {
        let Some(rights) = gg.get(gamma) else { continue };
        let w = gamma.multiplicity();
        for (a, fv) in lefts {
            for (b, gv) in rights {
                *blocks.entry((a.clone(), b.clone())).or_insert(0.0) += w * fv * gv;
            }
        }
    }
    blocks.retain(|_, v| *v != 0.0);
    Ok(Contraction {
        left_order: f.order - r,
        right_order: g.order - r,
        basis_dim: f.basis_dim,
        blocks,
    })
}

/// F = f₀ + Σ_k I_k(f_k) with finitely many nonzero kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosVector {
    basis_dim: usize,
    constant: f64,
    kernels: BTreeMap<usize, SymmetricKernel>,
}

impl ChaosVector {
    pub fn constant(c: f64, basis_dim: usize) -> Self {
        Self {
            basis_dim,
            constant: c,
            kernels: BTreeMap::new(),
        }
    }

    /// I_k(f).
    pub fn single(f: SymmetricKernel) -> Result<Self> {
        let mut v = Self::constant(0.0, f.basis_dim);
        v.add_kernel(f, 1.0)?;
        Ok(v)
    }

    /// Builds f₀ + Σ I_k(f_k); kernels of equal order are summed.
    pub fn new(constant: f64, basis_dim: usize, kernels: impl IntoIterator<Item = SymmetricKernel>) -> Result<Self> {
        let mut v = Self::constant(constant, basis_dim);
        for k in kernels {
            v.add_kernel(k, 1.0)?;
        }
        Ok(v)
    }

    /// `self += c·I_k(f)`.
    pub fn add_kernel(&mut self, f: SymmetricKernel, c: f64) -> Result<()> {
        if f.basis_dim != self.basis_dim {
            return Err(Error::DimensionMismatch {
                expected: self.basis_dim,
                got: f.basis_dim,
            });
        }
        if f.order > MAX_ORDER {
            bail!(Capability, "chaos order {} exceeds {MAX_ORDER}", f.order);
        }
        if f.order == 0 {
            self.constant += c * f.get(&MultiIndex::empty());
            return Ok(());
        }
        match self.kernels.get_mut(&f.order) {
            Some(k) => {
                k.add_scaled(&f, c)?;
                if k.nnz() == 0 {
                    self.kernels.remove(&f.order);
                }
            }
            None => {
                let k = f.scale(c);
                if k.nnz() > 0 {
                    self.kernels.insert(k.order, k);
                }
            }
        }
        Ok(())
    }

    pub fn basis_dim(&self) -> usize {
        self.basis_dim
    }

    /// f₀ = E F.
    pub fn mean(&self) -> f64 {
        self.constant
    }

    pub fn kernel(&self, order: usize) -> Option<&SymmetricKernel> {
        self.kernels.get(&order)
    }

    pub fn kernels(&self) -> impl Iterator<Item = &SymmetricKernel> {
        self.kernels.values()
    }

    pub fn max_order(&self) -> usize {
        self.kernels.keys().next_back().copied().unwrap_or(0)
    }

    /// c·F.
    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::constant(c * self.constant, self.basis_dim);
        for k in self.kernels.values() {
            let s = k.scale(c);
            if s.nnz() > 0 {
                out.kernels.insert(s.order, s);
            }
        }
        out
    }

    /// F + c·G.
    pub fn add_scaled(&self, other: &ChaosVector, c: f64) -> Result<Self> {
        let mut out = self.clone();
        if other.basis_dim != self.basis_dim {
            return Err(Error::DimensionMismatch {
                expected: self.basis_dim,
                got: other.basis_dim,
            });
        }
        out.constant += c * other.constant;
        for k in other.kernels.values() {
            out.add_kernel(k.clone(), c)?;
        }
        Ok(out)
    }

    /// Applies `g(k, f_k)` to every kernel, and `c0` to the constant.
    pub fn map_orders(&self, c0: f64, g: impl Fn(usize) -> f64) -> Self {
        let mut out = Self::constant(c0, self.basis_dim);
        for (&k, f) in &self.kernels {
            let s = f.scale(g(k));
            if s.nnz() > 0 {
                out.kernels.insert(k, s);
            }
        }
        out
    }
}

/// One realization of (Z_0 … Z_{n−1}).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPoint(pub Vec<f64>);

impl GaussianPoint {
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        GaussianPoint((0..n).map(|_| rng.sample(StandardNormal)).collect())
    }
}

/// F·G by the product formula
/// I_p(f) I_q(g) = Σ_r r! C(p,r) C(q,r) I_{p+q−2r}(f ⊗̃_r g).
pub fn multiply(f: &ChaosVector, g: &ChaosVector) -> Result<ChaosVector> {
    if f.basis_dim != g.basis_dim {
        return Err(Error::DimensionMismatch {
            expected: f.basis_dim,
            got: g.basis_dim,
        });
    }
    if f.max_order() + g.max_order() > MAX_ORDER {
        bail!(
            Capability,
            "product order {} exceeds {MAX_ORDER}",
            f.max_order() + g.max_order()
        );
    }
    let mut out = ChaosVector::constant(f.constant * g.constant, f.basis_dim);
    for k in g.kernels.values() {
        out.add_kernel(k.clone(), f.constant)?;
    }
    for k in f.kernels.values() {
        out.add_kernel(k.clone(), g.constant)?;
    }
    for (&p, fk) in &f.kernels {
        for (&q, gk) in &g.kernels {
            for r in 0..=p.min(q) {
                let c = factorial(r) * binomial(p, r) * binomial(q, r);
                let h = contract(fk, gk, r)?;
                if p + q == 2 * r {
                    out.constant += c * h.scalar();
                } else {
                    out.add_kernel(h.symmetrize(), c)?;
                }
            }
        }
    }
    Ok(out)
}

/// F(Z).
pub fn evaluate(f: &ChaosVector, z: &GaussianPoint) -> Result<f64> {
    if z.0.len() != f.basis_dim {
        return Err(Error::DimensionMismatch {
            expected: f.basis_dim,
            got: z.0.len(),
        });
    }
    let deg = f.max_order();
    let tables: Vec<Vec<f64>> = z.0.iter().map(|&x| hermite_table(deg, x)).collect();
    Ok(f.constant + f.kernels.values().map(|k| k.eval_with(&tables)).sum::<f64>())
}

/// E[FG] = f₀g₀ + Σ_k k! ⟨f_k, g_k⟩.
pub fn chaos_inner(f: &ChaosVector, g: &ChaosVector) -> Result<f64> {
    if f.basis_dim != g.basis_dim {
        return Err(Error::DimensionMismatch {
            expected: f.basis_dim,
            got: g.basis_dim,
        });
    }
    let mut s = f.constant * g.constant;
    for (&k, fk) in &f.kernels {
        if let Some(gk) = g.kernels.get(&k) {
            s += factorial(k) * fk.inner(gk);
        }
    }
    Ok(s)
}

/// Exact E[F^m].
pub fn moment(f: &ChaosVector, m: usize) -> Result<f64> {
    if m * f.max_order() > MAX_ORDER {
        bail!(Capability, "moment {m} of an order-{} vector exceeds order {MAX_ORDER}", f.max_order());
    }
    match m {
        0 => Ok(1.0),
        1 => Ok(f.constant),
        _ => {
            // E[F^m] = E[F^a F^b] with a + b = m.
            let a = m / 2;
            let mut pa = f.clone();
            for _ in 1..a {
                pa = multiply(&pa, f)?;
            }
            let pb = if m - a == a { pa.clone() } else { multiply(&pa, f)? };
            chaos_inner(&pa, &pb)
        }
    }
}

/// Outcome of the E F⁴ ≤ [3^k k!]⁴ ‖f‖⁴ check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypercontractivityReport {
    pub fourth_moment: f64,
    pub cap: f64,
    pub pass: bool,
}

pub fn hypercontractivity_check(f: &SymmetricKernel) -> Result<HypercontractivityReport> {
    let k = f.order();
    let m4 = moment(&ChaosVector::single(f.clone())?, 4)?;
    let c = libm::pow(3.0, k as f64) * factorial(k);
    let cap = c.powi(4) * f.norm_sq().powi(2);
    Ok(HypercontractivityReport {
        fourth_moment: m4,
        cap,
        pass: m4 <= cap * (1.0 + 1e-12),
    })
}

/// Monte Carlo mean of F(Z)^m.
pub fn sample_moment<E: Executor>(f: &ChaosVector, m: usize, n: usize, mc: &MonteCarlo<E>) -> Estimate {
    let dim = f.basis_dim;
    let parts = mc.run(n, |rng, len| {
        let mut acc = Moments::default();
        for _ in 0..len {
            let z = GaussianPoint::sample(dim, rng);
            let v = evaluate(f, &z).unwrap_or(f64::NAN);
            acc.push(v.powi(m as i32));
        }
        acc
    });
    Moments::merge_all(parts).estimate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::SQRT_2;

    fn e_otimes_e() -> SymmetricKernel {
        SymmetricKernel::basis_power(0, 2, 1).unwrap().scale(1.0 / SQRT_2)
    }

    #[test]
    fn multiplicities() {
        assert_eq!(MultiIndex::new([0, 1, 1]).multiplicity(), 3.0);
        assert_eq!(MultiIndex::new([2, 0, 1]).multiplicity(), 6.0);
        assert_eq!(MultiIndex::new([1, 1, 1, 1]).multiplicity(), 1.0);
        let s = MultiIndex::new([0, 1, 1, 2]).splits(2);
        // {0,1},{0,2},{1,1},{1,2}
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn symmetrize_two_term_average() {
        let mut raw = RawTensor::new(2, 2);
        raw.entries.insert(vec![0, 1], 1.0);
        let k = symmetrize(&raw).unwrap();
        assert_eq!(k.at(&[0, 1]), 0.5);
        assert_eq!(k.at(&[1, 0]), 0.5);
        assert!(k.norm_sq() <= raw.norm_sq());
        let again = symmetrize(&RawTensor {
            order: 2,
            basis_dim: 2,
            entries: [(vec![0, 1], 0.5), (vec![1, 0], 0.5)].into_iter().collect(),
        })
        .unwrap();
        assert_eq!(again, k);
    }

    #[test]
    fn contraction_of_canonical_kernel() {
        let f = e_otimes_e();
        let c = contract(&f, &f, 1).unwrap();
        assert!((c.norm_sq() - 0.25).abs() < 1e-15);
        assert!((c.symmetrize().at(&[0, 0]) - 0.5).abs() < 1e-15);
        let full = contract(&f, &f, 2).unwrap();
        assert!((full.scalar() - f.norm_sq()).abs() < 1e-15);
    }

    #[test]
    fn contraction_raw_matches_coordinate_sum() {
        let f = SymmetricKernel::from_entries(2, 3, [(vec![0, 1], 0.3), (vec![1, 1], -0.7), (vec![0, 2], 1.1)]).unwrap();
        let g = SymmetricKernel::from_entries(3, 3, [(vec![0, 1, 2], 0.4), (vec![1, 1, 2], 0.9), (vec![0, 0, 0], -0.2)]).unwrap();
        let c = contract(&f, &g, 1).unwrap().to_raw();
        for a in 0..3 {
            for b in 0..3 {
                for d in 0..3 {
                    let want: f64 = (0..3).map(|s| f.at(&[a, s]) * g.at(&[b, d, s])).sum();
                    let got = c.entries.get(&vec![a, b, d]).copied().unwrap_or(0.0);
                    assert!((want - got).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn evaluation_examples() {
        let z = GaussianPoint(vec![0.7, -1.3]);
        let i1 = ChaosVector::single(SymmetricKernel::basis_power(0, 1, 2).unwrap()).unwrap();
        assert_eq!(evaluate(&i1, &z).unwrap(), 0.7);
        let i2 = ChaosVector::single(SymmetricKernel::basis_power(0, 2, 2).unwrap()).unwrap();
        assert!((evaluate(&i2, &z).unwrap() - (0.49 - 1.0)).abs() < 1e-15);
        let mut raw = RawTensor::new(2, 2);
        raw.entries.insert(vec![0, 1], 1.0);
        let cross = ChaosVector::single(symmetrize(&raw).unwrap()).unwrap();
        assert!((evaluate(&cross, &z).unwrap() - 0.7 * -1.3).abs() < 1e-15);
    }

    #[test]
    fn product_examples() {
        let e = ChaosVector::single(SymmetricKernel::basis_power(0, 1, 1).unwrap()).unwrap();
        let sq = multiply(&e, &e).unwrap();
        assert_eq!(sq.mean(), 1.0);
        assert_eq!(sq.kernel(2).unwrap().at(&[0, 0]), 1.0);

        let f = ChaosVector::single(e_otimes_e()).unwrap();
        let ff = multiply(&f, &f).unwrap();
        assert!((ff.mean() - 1.0).abs() < 1e-15);
        assert_eq!(ff.kernels().map(|k| k.order()).collect::<Vec<_>>(), vec![2, 4]);
    }

    #[test]
    fn exact_moments() {
        let f = ChaosVector::single(e_otimes_e()).unwrap();
        assert!((moment(&f, 2).unwrap() - 1.0).abs() < 1e-14);
        assert!((moment(&f, 4).unwrap() - 15.0).abs() < 1e-12);
        // E[(Z²−1)³]/2^{3/2} = 8/2^{3/2}
        assert!((moment(&f, 3).unwrap() - 8.0 / 8f64.sqrt()).abs() < 1e-12);
        let e = ChaosVector::single(SymmetricKernel::basis_power(0, 1, 1).unwrap()).unwrap();
        assert!((moment(&e, 4).unwrap() - 3.0).abs() < 1e-14);
        let h = hypercontractivity_check(&e_otimes_e()).unwrap();
        assert!(h.pass);
        assert!((h.cap - 26244.0).abs() < 1e-9);
    }

    #[test]
    fn orthogonality_across_orders() {
        let e = SymmetricKernel::basis_power(0, 1, 1).unwrap();
        let f = ChaosVector::single(e.clone()).unwrap();
        let g = ChaosVector::single(SymmetricKernel::basis_power(0, 2, 1).unwrap()).unwrap();
        assert_eq!(chaos_inner(&f, &g).unwrap(), 0.0);
        let c = ChaosVector::new(0.4, 1, [e]).unwrap();
        assert_eq!(chaos_inner(&c, &ChaosVector::constant(1.0, 1)).unwrap(), 0.4);
    }

    #[test]
    fn sample_moment_reproduces_exact() {
        let f = ChaosVector::single(e_otimes_e()).unwrap();
        let est = sample_moment(&f, 2, 200_000, &MonteCarlo::new(3));
        assert!(est.z_score(1.0) < 4.0, "{est:?}");
    }
}
