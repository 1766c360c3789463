//! Complex log-Gamma, Gamma ratios, the Barnes G-function and the Gamma-integral identity.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quad::{integrate_real, QuadOptions};

/// B_2, B_4, ..., B_22.
const BERNOULLI_EVEN: [f64; 11] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
];

const LN_GAMMA_SHIFT: f64 = 15.0;
const BARNES_SHIFT: f64 = 20.0;

/// Returns `Some(n)` when `z` equals the non-positive integer `-n`.
pub fn nonpositive_integer(z: Complex64) -> Option<u64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        Some((-z.re) as u64)
    } else {
        None
    }
}

fn ln_gamma_upper(z: Complex64) -> Complex64 {
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < LN_GAMMA_SHIFT {
        shift += w.ln();
        w += 1.0;
    }
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate().take(10) {
        let n = 2.0 * (k as f64 + 1.0);
        series += pow * (b / (n * (n - 1.0)));
        pow *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift
}

/// Principal-branch log-Gamma, analytic on the plane cut along the negative real axis.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    if nonpositive_integer(z).is_some() {
        return Err(Error::Pole {
            function: "Gamma",
            at: z,
        });
    }
    if z.im < 0.0 {
        Ok(ln_gamma_upper(z.conj()).conj())
    } else {
        Ok(ln_gamma_upper(z))
    }
}

/// Γ(z); zero is never returned, poles are errors.
pub fn gamma(z: Complex64) -> Result<Complex64> {
    ln_gamma(z).map(|l| l.exp())
}

/// Ratio Γ(a₁)⋯Γ(a_n) / Γ(b₁)⋯Γ(b_m) in hypergeometric notation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GammaRatioSpec {
    pub numerators: Vec<Complex64>,
    pub denominators: Vec<Complex64>,
}

impl GammaRatioSpec {
    pub fn new(numerators: Vec<Complex64>, denominators: Vec<Complex64>) -> Self {
        Self {
            numerators,
            denominators,
        }
    }
}

/// ln of the residue-normalised factor of Γ at -m: Γ(-m + δ) ≈ (-1)^m / (m! δ).
fn pole_residue_ln(m: u64) -> Complex64 {
    let ln_fact = ln_gamma_upper(Complex64::new(m as f64 + 1.0, 0.0));
    let phase = if m % 2 == 1 { PI } else { 0.0 };
    Complex64::new(-ln_fact.re, phase)
}

/// Evaluates a Gamma ratio in log space.
///
/// Poles are counted first: an excess of numerator poles is an error, an excess of
/// denominator poles gives exact zero, and balanced poles are resolved by the ratio
/// of residues.
pub fn gamma_ratio(spec: &GammaRatioSpec) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut num_poles = 0usize;
    let mut den_poles = 0usize;
    let mut first_pole = None;
    for &z in &spec.numerators {
        match nonpositive_integer(z) {
            Some(m) => {
                num_poles += 1;
                first_pole.get_or_insert(z);
                acc += pole_residue_ln(m);
            }
            None => acc += ln_gamma(z)?,
        }
    }
    for &z in &spec.denominators {
        match nonpositive_integer(z) {
            Some(m) => {
                den_poles += 1;
                acc -= pole_residue_ln(m);
            }
            None => acc -= ln_gamma(z)?,
        }
    }
    if num_poles > den_poles {
        return Err(Error::Pole {
            function: "Gamma ratio",
            at: first_pole.unwrap_or_default(),
        });
    }
    if den_poles > num_poles {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(acc.exp())
}

fn ln_barnes_asymptotic(w: Complex64) -> Complex64 {
    // ln G(w + 1) without the additive constant.
    let lw = w.ln();
    let w2 = w * w;
    let inv2 = 1.0 / w2;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv2;
    for k in 1..=9 {
        let kf = k as f64;
        series += pow * (BERNOULLI_EVEN[k] / (4.0 * kf * (kf + 1.0)));
        pow *= inv2;
    }
    0.5 * w2 * lw - 0.75 * w2 + 0.5 * w * (2.0 * PI).ln() - lw / 12.0 + series
}

fn ln_barnes_unnormalised(z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < BARNES_SHIFT {
        acc += ln_gamma_upper_any(w);
        w += 1.0;
    }
    ln_barnes_asymptotic(w - 1.0) - acc
}

fn ln_gamma_upper_any(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        ln_gamma_upper(z.conj()).conj()
    } else {
        ln_gamma_upper(z)
    }
}

/// The additive constant of ln G, fixed by the normalisation G(1) = 1.
pub fn barnes_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| -ln_barnes_unnormalised(Complex64::new(1.0, 0.0)).re)
}

/// ln G(z); `None` at the zeros z = 0, -1, -2, ...
pub fn ln_barnes_g(z: Complex64) -> Option<Complex64> {
    if nonpositive_integer(z).is_some() {
        return None;
    }
    Some(ln_barnes_unnormalised(z) + barnes_constant())
}

/// Barnes G-function, G(z + 1) = Γ(z) G(z), G(1) = 1.
pub fn barnes_g(z: Complex64) -> Complex64 {
    ln_barnes_g(z).map_or(Complex64::new(0.0, 0.0), |l| l.exp())
}

/// G(1, x) = G(1 + x) G(1 - x), symmetric in x by construction.
pub fn barnes_g_one(x: Complex64) -> Complex64 {
    match (ln_barnes_g(1.0 + x), ln_barnes_g(1.0 - x)) {
        (Some(a), Some(b)) => (a + b).exp(),
        _ => Complex64::new(0.0, 0.0),
    }
}

/// Taylor coefficients of πw / sinh(πw) in powers of w.
fn pi_w_over_sinh_coeffs(n: usize) -> Vec<f64> {
    // x/sinh x = sum (2 - 2^{2k}) B_{2k} x^{2k} / (2k)!
    let mut out = vec![0.0; n];
    out[0] = 1.0;
    let mut fact = 1.0;
    for k in 1..=(n - 1) / 2 {
        let kk = 2 * k;
        fact *= (kk - 1) as f64 * kk as f64;
        if k - 1 < BERNOULLI_EVEN.len() {
            let b = BERNOULLI_EVEN[k - 1];
            out[kk] = (2.0 - 2f64.powi(kk as i32)) * b * PI.powi(kk as i32) / fact;
        }
    }
    out
}

/// Integrand of the Gamma-integral identity with a Taylor expansion near ω = 0.
fn gamma_identity_integrand(a: f64, b: f64, p: f64, w: f64) -> f64 {
    const SERIES_BELOW: f64 = 0.02;
    if w < SERIES_BELOW {
        // (e^{-aw} - e^{-bw})/w = sum d_k w^k, d_k = ((-a)^{k+1} - (-b)^{k+1}) / (k+1)!
        const N: usize = 12;
        let s = pi_w_over_sinh_coeffs(N);
        let mut d = [0.0; N];
        let (mut pa, mut pb, mut fact) = (-a, -b, 1.0);
        for (k, dk) in d.iter_mut().enumerate() {
            fact *= (k + 1) as f64;
            *dk = (pa - pb) / fact;
            pa *= -a;
            pb *= -b;
        }
        // bracket/w = -(sum_{k>=1} c_k w^{k-1}) where c = d * s.
        let mut val = 0.0;
        let mut pow = 1.0;
        for k in 1..N {
            let ck: f64 = (0..=k).map(|j| d[j] * s[k - j]).sum();
            val -= ck * pow;
            pow *= w;
        }
        return (-p * w).exp() * val;
    }
    let bracket = b - a - PI / (PI * w).sinh() * ((-a * w).exp() - (-b * w).exp());
    (-p * w).exp() * bracket / w
}

/// Right-hand side of the identity, (a-b) ln(p/2π) + 2π ln[Γ((p+b)/2π+½)/Γ((p+a)/2π+½)].
pub fn gamma_integral_closed_form(a: f64, b: f64, p: f64) -> Result<f64> {
    let tp = 2.0 * PI;
    let gb = ln_gamma(Complex64::new((p + b) / tp + 0.5, 0.0))?;
    let ga = ln_gamma(Complex64::new((p + a) / tp + 0.5, 0.0))?;
    Ok((a - b) * (p / tp).ln() + tp * (gb - ga).re)
}

/// Left-hand side of the identity by adaptive quadrature on [0, ∞).
pub fn gamma_integral_quadrature(a: f64, b: f64, p: f64) -> Result<f64> {
    // Decay rate of the integrand is at least min(p, p + π + min(a, b)).
    let rate = p.min(p + PI + a.min(b));
    let end = 45.0 / rate;
    let mut bps = vec![0.0, 0.02];
    let mut x = 0.25;
    while x < end {
        bps.push(x);
        x *= 2.0;
    }
    bps.push(end);
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    integrate_real(|w| gamma_identity_integrand(a, b, p, w), &bps, opts)
}

/// Relative residual |LHS - RHS| / (1 + |RHS|) of the Gamma-integral identity.
pub fn verify_gamma_integral_identity(a: f64, b: f64, p: f64) -> Result<f64> {
    if !(p > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(
            "identity needs p > 0 and finite a, b".into(),
        ));
    }
    if a.abs() >= p + PI || b.abs() >= p + PI {
        return Err(Error::InvalidInput(
            "integrand does not decay: need |a|, |b| < p + pi".into(),
        ));
    }
    let lhs = gamma_integral_quadrature(a, b, p)?;
    let rhs = gamma_integral_closed_form(a, b, p)?;
    Ok((lhs - rhs).abs() / (1.0 + rhs.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent oracle: ln Γ(z) for large Re z from Stirling, recursed downward.
    fn ln_gamma_oracle(z: Complex64) -> Complex64 {
        let w = z + 20.0;
        let mut acc = c(0.0, 0.0);
        for k in 0..20 {
            acc += (z + k as f64).ln();
        }
        let inv = 1.0 / w;
        let st = (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + inv / 12.0 - inv.powi(3) / 360.0
            + inv.powi(5) / 1260.0
            - inv.powi(7) / 1680.0
            + inv.powi(9) / 1188.0;
        st - acc
    }

    /// Product oracle for ln G(1 + z) with Richardson in the truncation order.
    fn ln_barnes_product_oracle(z: f64) -> f64 {
        const EULER: f64 = 0.577_215_664_901_532_9;
        let partial = |n: usize| -> f64 {
            let mut s = 0.0;
            for k in 1..=n {
                let kf = k as f64;
                s += kf * (z / kf).ln_1p() + z * z / (2.0 * kf) - z;
            }
            s
        };
        let n = 100_000;
        let s1 = partial(n);
        let s2 = partial(2 * n);
        let s = 2.0 * s2 - s1;
        0.5 * z * (2.0 * PI).ln() - 0.5 * (z + z * z * (1.0 + EULER)) + s
    }

    #[test]
    fn ln_gamma_trivial_values() {
        assert!(ln_gamma(c(1.0, 0.0)).unwrap().norm() < 1e-14);
        let half = ln_gamma(c(0.5, 0.0)).unwrap();
        assert!((half - c(0.5 * PI.ln(), 0.0)).norm() < 1e-14);
        assert!((ln_gamma(c(2.0, 0.0)).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn ln_gamma_recursion_oracle() {
        let z = c(3.0, 4.0);
        let got = ln_gamma(z).unwrap();
        let want = ln_gamma_oracle(z);
        // Both are branch-continuous from the right half plane.
        assert!((got - want).norm() < 1e-13, "{got} vs {want}");
    }

    #[test]
    fn ln_gamma_poles_are_errors() {
        assert!(ln_gamma(c(0.0, 0.0)).is_err());
        assert!(ln_gamma(c(-3.0, 0.0)).is_err());
        assert!(ln_gamma(c(-3.0, 1e-300)).is_ok());
    }

    #[test]
    fn gamma_matches_factorial_and_reflection() {
        for n in 1..20 {
            let f: f64 = (1..n).map(|k| k as f64).product();
            let g = gamma(c(n as f64, 0.0)).unwrap();
            assert!((g.re / f - 1.0).abs() < 1e-13);
        }
        let z = c(-2.3, 0.7);
        let lhs = gamma(z).unwrap() * gamma(1.0 - z).unwrap();
        let rhs = PI / (PI * z).sin();
        assert!((lhs / rhs - 1.0).norm() < 1e-13);
        // Large argument relative accuracy.
        let z = c(-30.5, 20.0);
        let lhs = gamma(z).unwrap() * gamma(1.0 - z).unwrap();
        let rhs = PI / (PI * z).sin();
        assert!((lhs / rhs - 1.0).norm() < 1e-12);
    }

    #[test]
    fn gamma_ratio_examples() {
        let r = gamma_ratio(&GammaRatioSpec::new(vec![c(2.0, 0.0)], vec![c(1.0, 0.0)])).unwrap();
        assert!((r - 1.0).norm() < 1e-15);
        let nu = 0.5;
        let r = gamma_ratio(&GammaRatioSpec::new(
            vec![c(1.0 + nu, 0.0), c(1.0 - nu, 0.0)],
            vec![c(1.0, 0.0), c(1.0, 0.0)],
        ))
        .unwrap();
        assert!((r - PI / 2.0).norm() < 1e-14);
        let r = gamma_ratio(&GammaRatioSpec::new(vec![c(5.0, 0.0)], vec![c(3.0, 0.0)])).unwrap();
        assert!((r - 12.0).norm() < 1e-12);
    }

    #[test]
    fn gamma_ratio_pole_counting() {
        let zero =
            gamma_ratio(&GammaRatioSpec::new(vec![c(1.5, 0.0)], vec![c(-2.0, 0.0)])).unwrap();
        assert_eq!(zero, c(0.0, 0.0));
        assert!(matches!(
            gamma_ratio(&GammaRatioSpec::new(vec![c(-1.0, 0.0)], vec![c(2.0, 0.0)])),
            Err(Error::Pole { .. })
        ));
        // Γ(-1+δ)/Γ(-2+δ) -> -2 as δ -> 0.
        let r = gamma_ratio(&GammaRatioSpec::new(vec![c(-1.0, 0.0)], vec![c(-2.0, 0.0)])).unwrap();
        assert!((r - c(-2.0, 0.0)).norm() < 1e-14);
        let d = 1e-7;
        let near = gamma_ratio(&GammaRatioSpec::new(
            vec![c(-1.0 + d, 0.0)],
            vec![c(-2.0 + d, 0.0)],
        ))
        .unwrap();
        assert!((near - r).norm() < 1e-5);
    }

    #[test]
    fn barnes_constant_matches_zeta_prime() {
        // ln G(w+1) asymptotic constant is ζ'(-1).
        assert!((barnes_constant() - (-0.165_421_143_700_450_93)).abs() < 1e-13);
    }

    #[test]
    fn barnes_trivial_values() {
        assert!((barnes_g(c(1.0, 0.0)) - 1.0).norm() < 1e-13);
        assert!((barnes_g(c(2.0, 0.0)) - 1.0).norm() < 1e-13);
        assert!((barnes_g(c(3.0, 0.0)) - 1.0).norm() < 1e-13);
        assert!((barnes_g(c(4.0, 0.0)) - 2.0).norm() < 1e-12);
        assert!((barnes_g(c(6.0, 0.0)) - 288.0).norm() < 1e-10);
        assert_eq!(barnes_g(c(0.0, 0.0)), c(0.0, 0.0));
        assert_eq!(barnes_g(c(-4.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn barnes_product_oracle() {
        let want = ln_barnes_product_oracle(0.5).exp();
        let got = barnes_g(c(1.5, 0.0));
        assert!((got.re / want - 1.0).abs() < 1e-9, "{got} vs {want}");
        assert!(got.im.abs() < 1e-15);
        let want = ln_barnes_product_oracle(-0.5).exp();
        let got = barnes_g(c(0.5, 0.0));
        assert!((got.re / want - 1.0).abs() < 1e-9);
    }

    #[test]
    fn barnes_g_one_values() {
        assert!((barnes_g_one(c(0.0, 0.0)) - 1.0).norm() < 1e-13);
        assert_eq!(barnes_g_one(c(1.0, 0.0)), c(0.0, 0.0));
        assert_eq!(barnes_g_one(c(-2.0, 0.0)), c(0.0, 0.0));
        let got = barnes_g_one(c(0.5, 0.0));
        let want = (ln_barnes_product_oracle(0.5) + ln_barnes_product_oracle(-0.5)).exp();
        assert!((got.re / want - 1.0).abs() < 1e-9);
        let prod = barnes_g(c(1.5, 0.0)) * barnes_g(c(0.5, 0.0));
        assert!((got / prod - 1.0).norm() < 1e-13);
    }

    #[test]
    fn gamma_integral_identity_examples() {
        assert_eq!(verify_gamma_integral_identity(0.4, 0.4, 1.3).unwrap(), 0.0);
        assert!(verify_gamma_integral_identity(0.3, 0.7, 1.0).unwrap() <= 1e-8);
        assert!(verify_gamma_integral_identity(-0.4, 0.4, 2.0).unwrap() <= 1e-8);
        // Reference values computed with 50-digit arithmetic.
        let l = gamma_integral_quadrature(0.3, 0.7, 1.0).unwrap();
        assert!((l - 0.288_839_527_799_144_37).abs() < 1e-12);
        let l = gamma_integral_quadrature(-0.4, 0.4, 2.0).unwrap();
        assert!((l - 0.174_622_042_443_063_66).abs() < 1e-12);
    }

    #[test]
    fn gamma_integral_series_matches_direct_form() {
        for &(a, b, p) in &[(0.3, 0.7, 1.0), (-0.4, 0.4, 2.0), (1.0, -2.0, 0.5)] {
            let w = 0.0199;
            let bracket = b - a - PI / (PI * w).sinh() * ((-a * w).exp() - (-b * w).exp());
            let direct = (-p * w).exp() * bracket / w;
            let series = gamma_identity_integrand(a, b, p, w - 1e-12);
            assert!((direct - series).abs() < 1e-11, "{direct} {series}");
        }
    }

    proptest! {
        #[test]
        fn barnes_recursion(re in -10.0f64..10.0, im in -10.0f64..10.0) {
            let z = c(re, im);
            prop_assume!(z.norm() <= 10.0);
            prop_assume!(nonpositive_integer(z).is_none());
            let lhs = barnes_g(z + 1.0);
            let rhs = gamma(z).unwrap() * barnes_g(z);
            prop_assert!((lhs - rhs).norm() <= 1e-11 * (1.0 + lhs.norm()));
        }

        #[test]
        fn barnes_g_one_is_even(re in -6.0f64..6.0, im in -6.0f64..6.0) {
            let x = c(re, im);
            prop_assert_eq!(barnes_g_one(x), barnes_g_one(-x));
        }

        #[test]
        fn reflection(nu in -0.49f64..0.49) {
            prop_assume!(nu != 0.0);
            let r = gamma_ratio(&GammaRatioSpec::new(
                vec![c(1.0 + nu, 0.0), c(1.0 - nu, 0.0)],
                vec![c(1.0, 0.0), c(1.0, 0.0)],
            )).unwrap();
            prop_assert!((r - PI * nu / (PI * nu).sin()).norm() <= 1e-12);
        }

        #[test]
        fn conjugation(re in -20.0f64..20.0, im in 0.01f64..20.0) {
            let z = c(re, im);
            prop_assert_eq!(ln_gamma(z.conj()).unwrap(), ln_gamma(z).unwrap().conj());
        }

        #[test]
        fn ln_gamma_recursion(re in -15.0f64..15.0, im in -15.0f64..15.0) {
            let z = c(re, im);
            prop_assume!(z.norm() > 1e-3 && im.abs() > 1e-3);
            let lhs = gamma(z + 1.0).unwrap();
            let rhs = z * gamma(z).unwrap();
            prop_assert!((lhs / rhs - 1.0).norm() <= 1e-13);
        }
    }
}
