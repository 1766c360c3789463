//! Cauchy transform L[f](ω) = ∫ f(λ)/(λ - ω) dλ over an interval grid.

use num_complex::Complex64;

use super::grid::SampledFunction;
use crate::error::{Error, Result};

/// Panels whose Bernstein-ellipse parameter satisfies ρ^{-2n} below this use plain quadrature.
const DIRECT_LOG_THRESHOLD: f64 = 38.0;

/// Bernstein parameter ρ ≥ 1 of `s` relative to the reference interval [-1, 1].
fn bernstein_rho(s: Complex64) -> f64 {
    let r = (s - 1.0).sqrt() * (s + 1.0).sqrt();
    (s + r).norm().max((s - r).norm())
}

/// Cauchy transform using the local polynomial interpolant for near-singular panels.
pub fn cauchy_transform(f: &SampledFunction, omega: Complex64) -> Result<Complex64> {
    cauchy_transform_impl(f, omega, None::<&fn(Complex64) -> Complex64>)
}

/// Cauchy transform using `continuation`, an analytic extension of `f`, for near-singular panels.
pub fn cauchy_transform_with<G: Fn(Complex64) -> Complex64>(
    f: &SampledFunction,
    omega: Complex64,
    continuation: &G,
) -> Result<Complex64> {
    cauchy_transform_impl(f, omega, Some(continuation))
}

fn cauchy_transform_impl<G: Fn(Complex64) -> Complex64>(
    f: &SampledFunction,
    omega: Complex64,
    continuation: Option<&G>,
) -> Result<Complex64> {
    let grid = f.grid();
    let rule = grid
        .rule()
        .ok_or_else(|| Error::InvalidInput("Cauchy transform needs an interval grid".into()))?;
    let (lo, hi) = grid.support().expect("interval grid has a support");
    if omega.im == 0.0 && omega.re >= lo && omega.re <= hi {
        return Err(Error::OnSupport(omega));
    }
    let nodes = grid.nodes();
    let weights = grid.weights();
    let values = f.values();
    let mut total = Complex64::new(0.0, 0.0);
    let mut cached = None;
    for p in grid.panels() {
        let s = (2.0 * omega - p.a - p.b) / (p.b - p.a);
        let rho = bernstein_rho(s);
        let range = p.start..p.start + p.len;
        if 2.0 * p.len as f64 * rho.ln() > DIRECT_LOG_THRESHOLD {
            for i in range {
                total += weights[i] * values[i] / (nodes[i] - omega);
            }
            continue;
        }
        let f_omega = match continuation {
            Some(g) => *cached.get_or_insert_with(|| g(omega)),
            None => rule.interpolate(&values[range.clone()], s),
        };
        for i in range {
            total += weights[i] * (values[i] - f_omega) / (nodes[i] - omega);
        }
        total += f_omega * ((p.b - omega) / (p.a - omega)).ln();
    }
    Ok(total)
}
