//! Adaptive Gauss–Kronrod (7/15) integration on finite and half-infinite
//! intervals. Error estimates are |K15 − G7| summed over the final partition.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Maximum number of subintervals held at once.
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_intervals: 4000,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-12, 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Integral {
    const ZERO: Integral = Integral {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
        converged: true,
    };

    fn add(self, other: Integral) -> Integral {
        Integral {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }
}

#[derive(Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Piece> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kron * h;
    if !value.is_finite() {
        return Err(Error::Evaluation(alloc::format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    Ok(Piece {
        a,
        b,
        value,
        error: ((kron - gauss) * h).abs(),
    })
}

/// ∫_a^b f with global adaptive bisection of the worst subinterval.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if a == b {
        return Ok(Integral::ZERO);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "finite interval required, got [{a}, {b}]"
        )));
    }
    let mut pieces: Vec<Piece> = Vec::with_capacity(64);
    pieces.push(gk15(&mut f, a, b)?);
    let mut evaluations = 15;
    loop {
        let (value, error) = pieces
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            return Ok(Integral {
                value,
                error,
                evaluations,
                converged: true,
            });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = pieces[worst];
        let mid = 0.5 * (p.a + p.b);
        if pieces.len() >= tol.max_intervals || mid <= p.a || mid >= p.b {
            return Ok(Integral {
                value,
                error,
                evaluations,
                converged: false,
            });
        }
        pieces[worst] = gk15(&mut f, p.a, mid)?;
        pieces.push(gk15(&mut f, mid, p.b)?);
        evaluations += 30;
    }
}

/// Integrates across consecutive breakpoints, summing values and errors.
/// Each segment receives the full tolerance scaled by its share of segments.
pub fn integrate_segments<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    let segs = points.len().saturating_sub(1).max(1) as f64;
    let seg_tol = Tolerance {
        abs: tol.abs / segs,
        ..tol
    };
    let mut total = Integral::ZERO;
    for w in points.windows(2) {
        total = total.add(integrate(&mut f, w[0], w[1], seg_tol)?);
    }
    Ok(total)
}

/// ∫_a^∞ f via t = a + u/(1−u).
pub fn integrate_upper<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: Tolerance) -> Result<Integral> {
    integrate(
        |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let d = 1.0 - u;
            let v = f(a + u / d) / (d * d);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// ∫_{−∞}^b f.
pub fn integrate_lower<F: FnMut(f64) -> f64>(mut f: F, b: f64, tol: Tolerance) -> Result<Integral> {
    integrate_upper(|t| f(2.0 * b - t), b, tol)
}

/// ∫ over the real line, split at the sorted `breaks` (at least one point).
pub fn integrate_line<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    let lo = breaks.first().copied().unwrap_or(0.0);
    let hi = breaks.last().copied().unwrap_or(0.0);
    let parts = breaks.len().saturating_sub(1) as f64 + 2.0;
    let part_tol = Tolerance {
        abs: tol.abs / parts,
        ..tol
    };
    let left = integrate_lower(&mut f, lo, part_tol)?;
    let mid = if breaks.len() > 1 {
        integrate_segments(&mut f, breaks, part_tol)?
    } else {
        Integral::ZERO
    };
    let right = integrate_upper(&mut f, hi, part_tol)?;
    Ok(left.add(mid).add(right))
}
