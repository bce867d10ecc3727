#![allow(dead_code)]

use chaos_stein_core::chaos::{ChaosVector, SymmetricKernel};
use proptest::prelude::*;

/// A kernel of the given order on `dim` directions with up to 6 nonzero
/// entries drawn from [-1, 1].
pub fn kernel(order: usize, dim: usize) -> impl Strategy<Value = SymmetricKernel> {
    prop::collection::vec((prop::collection::vec(0..dim, order), -1.0..1.0f64), 1..6).prop_map(
        move |entries| SymmetricKernel::from_entries(order, dim, entries).expect("valid entries"),
    )
}

pub fn kernel_upto(max_order: usize, dim: usize) -> impl Strategy<Value = SymmetricKernel> {
    (1..=max_order).prop_flat_map(move |k| kernel(k, dim))
}

/// A chaos expansion with a constant and kernels of orders 1..=max_order.
pub fn chaos_vector(max_order: usize, dim: usize) -> impl Strategy<Value = ChaosVector> {
    (
        -1.0..1.0f64,
        prop::collection::vec(prop::option::of(-1.0..1.0f64), max_order),
        prop::collection::vec(kernel_upto(max_order, dim), max_order),
    )
        .prop_map(move |(c, keep, ks)| {
            let mut f = ChaosVector::constant(c, dim);
            for (i, scale) in keep.into_iter().enumerate() {
                if let Some(s) = scale {
                    let k = ks.iter().find(|k| k.order() == i + 1).cloned().unwrap_or_else(|| {
                        SymmetricKernel::basis_power(i % dim, i + 1, dim).expect("valid power")
                    });
                    f.add_kernel(k, s).expect("same dimension");
                }
            }
            f
        })
}

/// Multiple Wiener–Itô integral of order ≤ 3 by Wick's formula on the full
/// tensor, independent of the chaos module's Hermite evaluation.
pub fn wick_integral(f: &SymmetricKernel, z: &[f64]) -> f64 {
    let n = f.basis_dim();
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    match f.order() {
        0 => f.at(&[]),
        1 => (0..n).map(|i| f.at(&[i]) * z[i]).sum(),
        2 => {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += f.at(&[i, j]) * (z[i] * z[j] - d(i, j));
                }
            }
            s
        }
        3 => {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let wick = z[i] * z[j] * z[k] - d(i, j) * z[k] - d(i, k) * z[j] - d(j, k) * z[i];
                        s += f.at(&[i, j, k]) * wick;
                    }
                }
            }
            s
        }
        k => panic!("wick_integral handles orders up to 3, got {k}"),
    }
}

pub fn wick_eval(f: &ChaosVector, z: &[f64]) -> f64 {
    f.mean() + f.kernels().map(|k| wick_integral(k, z)).sum::<f64>()
}

/// E g(Z) for Z ~ N(0, I_dim) by a tensor Gauss–Hermite rule with m nodes
/// per axis, exact for polynomials of degree < 2m in each coordinate.
pub fn tensor_gauss(dim: usize, m: usize, g: impl Fn(&[f64]) -> f64) -> f64 {
    let rule = chaos_stein_core::hermite::gauss_hermite_rule(m).expect("valid rule");
    let mut idx = vec![0usize; dim];
    let mut z = vec![0.0; dim];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            z[k] = rule.nodes[i];
            w *= rule.weights[i];
        }
        total += w * g(&z);
        let mut k = 0;
        loop {
            if k == dim {
                return total;
            }
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
