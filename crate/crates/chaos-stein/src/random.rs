//! Seeded random kernels and chaos vectors for batch checks.

use chaos_stein_core::chaos::{ChaosVector, SymmetricKernel};
use rand::Rng;
use rand_distr::StandardNormal;

/// Sparse kernel with roughly half of its multi-indices populated by
/// standard normal coefficients.
pub fn kernel<R: Rng + ?Sized>(rng: &mut R, order: usize, basis_dim: usize) -> SymmetricKernel {
    let mut entries = Vec::new();
    let mut idx = vec![0usize; order];
    loop {
        if order == 0 || rng.random_bool(0.5) {
            entries.push((idx.clone(), rng.sample(StandardNormal)));
        }
        // next non-decreasing multi-index
        let Some(pos) = (0..order).rev().find(|&p| idx[p] + 1 < basis_dim) else { break };
        let v = idx[pos] + 1;
        idx[pos..].iter_mut().for_each(|x| *x = v);
    }
    if entries.is_empty() {
        entries.push((vec![0; order], 1.0));
    }
    SymmetricKernel::from_entries(order, basis_dim, entries).expect("indices are in range")
}

/// Kernel rescaled so that E I_k(f)² = 1.
pub fn unit_kernel<R: Rng + ?Sized>(rng: &mut R, order: usize, basis_dim: usize) -> SymmetricKernel {
    let f = kernel(rng, order, basis_dim);
    let var = (1..=order).map(|i| i as f64).product::<f64>() * f.norm_sq();
    f.scale(1.0 / var.sqrt())
}

/// Chaos vector with a random constant and components of orders 1..=max_order.
pub fn chaos_vector<R: Rng + ?Sized>(rng: &mut R, max_order: usize, basis_dim: usize) -> ChaosVector {
    let kernels: Vec<_> = (1..=max_order).map(|k| kernel(rng, k, basis_dim)).collect();
    ChaosVector::new(rng.sample(StandardNormal), basis_dim, kernels).expect("dimensions agree")
}

