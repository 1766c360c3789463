//! Nyström discretisation of (I - (sign/2π) K) f = g and Fredholm determinants.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use super::grid::{Grid, SampledFunction};
use crate::error::{Error, Result};

const MIN_PIVOT_RATIO: f64 = 1e-14;

fn pivot_ratio(lu: &LU<Complex64, Dyn, Dyn>) -> f64 {
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        let d = u[(i, i)].norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}

/// Factorised Nyström operator on a fixed grid.
#[derive(Debug, Clone)]
pub struct NystromOperator {
    grid: Arc<Grid>,
    sign: f64,
    lu: LU<Complex64, Dyn, Dyn>,
    pivot_ratio: f64,
}

impl NystromOperator {
    pub fn new<K: Fn(Complex64, Complex64) -> Complex64>(
        grid: Arc<Grid>,
        kernel: K,
        sign: f64,
    ) -> Result<Self> {
        let n = grid.len();
        let x = grid.nodes();
        let w = grid.weights();
        let scale = sign / (2.0 * PI);
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let k = kernel(x[i], x[j]);
                if !k.re.is_finite() || !k.im.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite kernel sample at ({}, {})",
                        x[i], x[j]
                    )));
                }
                m[(i, j)] = -k * w[j] * scale;
            }
            m[(i, i)] += 1.0;
        }
        let lu = m.lu();
        let ratio = pivot_ratio(&lu);
        if !(ratio > MIN_PIVOT_RATIO) {
            return Err(Error::Singular { pivot_ratio: ratio });
        }
        Ok(Self {
            grid,
            sign,
            lu,
            pivot_ratio: ratio,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    /// Smallest over largest |U_ii| of the LU factors, a cheap conditioning proxy.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    /// det(I - (sign/2π) K̂).
    pub fn determinant(&self) -> Complex64 {
        self.lu.determinant()
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Result<SampledFunction> {
        if rhs.len() != self.grid.len() {
            return Err(Error::InvalidInput("rhs length does not match grid".into()));
        }
        let b = DVector::from_column_slice(rhs);
        let x = self.lu.solve(&b).ok_or(Error::Singular {
            pivot_ratio: self.pivot_ratio,
        })?;
        SampledFunction::new(self.grid.clone(), x.iter().copied().collect())
    }
}

/// Solves f - (sign/2π) ∫ K(λ, μ) f(μ) dμ = rhs on the grid of `rhs`.
pub fn nystrom_solve<K: Fn(Complex64, Complex64) -> Complex64>(
    kernel: K,
    rhs: &SampledFunction,
    sign: f64,
) -> Result<SampledFunction> {
    NystromOperator::new(rhs.grid().clone(), kernel, sign)?.solve(rhs.values())
}

/// Off-grid value f(λ) = rhs(λ) + (sign/2π) Σ_j w_j K(λ, μ_j) f(μ_j).
pub fn nystrom_extend<K: Fn(Complex64, Complex64) -> Complex64>(
    kernel: K,
    sign: f64,
    solution: &SampledFunction,
    rhs_at: Complex64,
    lambda: Complex64,
) -> Complex64 {
    let s: Complex64 = solution
        .nodes()
        .iter()
        .zip(solution.weights())
        .zip(solution.values())
        .map(|((&mu, &w), &f)| kernel(lambda, mu) * w * f)
        .sum();
    rhs_at + s * (sign / (2.0 * PI))
}

/// det(I + prefactor · K̂) with K̂_ij = K(x_i, x_j) w_j.
pub fn fredholm_det<K: Fn(Complex64, Complex64) -> Complex64>(
    kernel: K,
    grid: &Grid,
    prefactor: Complex64,
) -> Result<Complex64> {
    let n = grid.len();
    let x = grid.nodes();
    let w = grid.weights();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let k = kernel(x[i], x[j]);
            if !k.re.is_finite() || !k.im.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite kernel sample at ({}, {})",
                    x[i], x[j]
                )));
            }
            m[(i, j)] = prefactor * k * w[j];
        }
        m[(i, i)] += 1.0;
    }
    fredholm_det_of_matrix(m)
}

/// Determinant of an already assembled I + K̂ matrix.
pub fn fredholm_det_of_matrix(m: DMatrix<Complex64>) -> Result<Complex64> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite Fredholm matrix entry".into()));
    }
    Ok(m.lu().determinant())
}
