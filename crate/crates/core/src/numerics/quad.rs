//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub intervals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> Result<Piece> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = half * XGK[j];
        let s = f(mid - x) + f(mid + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    let value = k * half;
    let error = ((k - g) * half).norm();
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    Ok(Piece { a, b, value, error })
}

/// Integrates `f` over the union of consecutive intervals defined by `breakpoints`.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    if breakpoints.len() < 2 {
        return Err(Error::InvalidInput("need at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    for w in breakpoints.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidInput(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        heap.push(kronrod(&mut f, w[0], w[1])?);
    }
    loop {
        let total: Complex64 = heap.iter().map(|p| p.value).sum();
        let err: f64 = heap.iter().map(|p| p.error).sum();
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= tol {
            return Ok(QuadResult {
                value: total,
                error: err,
                intervals: heap.len(),
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Numerical(format!(
                "adaptive quadrature stalled at error {err:e} (target {tol:e})"
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Numerical(
                "adaptive quadrature exhausted floating-point resolution".into(),
            ));
        }
        heap.push(kronrod(&mut f, worst.a, mid)?);
        heap.push(kronrod(&mut f, mid, worst.b)?);
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<f64> {
    integrate(|x| Complex64::new(f(x), 0.0), breakpoints, opts).map(|r| r.value.re)
}
