//! Amplitudes: the C₀ and C₁ functionals, the smooth and discrete factors of the
//! critical form factors, the W series, Ã_ℓ, and finite-temperature checks of the
//! discrete factor.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::excitation::{
    alpha_ell, root_offsets, u1_at_q, z_function, z_with_derivatives, ExcitationClass,
    ExcitedSolution, PlacedRoot, RootKind,
};
use crate::groundstate::GroundState;
use crate::model::kernel;
use crate::numerics::{cauchy_transform, fredholm_det, Contour, Grid, SampledFunction};
use crate::specfun::{barnes_g_one, gamma_ratio, ln_barnes_g, GammaRatioSpec};
use crate::thermal::Branch;

fn i() -> Complex64 {
    Complex64::i()
}

fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// ½∫∫ [f′(λ)f(μ) - f(λ)f′(μ)]/(λ - μ) dλ dμ on the grid of `f`, with the diagonal
/// replaced by its limit f f″ - f′².
pub fn antisymmetric_double_integral(
    f: &SampledFunction,
    d1: &SampledFunction,
    d2: &SampledFunction,
) -> Complex64 {
    let x = f.nodes();
    let w = f.weights();
    let (v, v1, v2) = (f.values(), d1.values(), d2.values());
    let n = x.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for b in 0..n {
            let g = if a == b {
                v[a] * v2[a] - v1[a] * v1[a]
            } else {
                (v1[a] * v[b] - v[a] * v1[b]) / (x[a] - x[b])
            };
            row += w[b] * g;
        }
        acc += w[a] * row;
    }
    0.5 * acc
}

/// ∫ (f(λ) - f(edge))/(λ - edge) dλ over the grid of `f`.
fn edge_difference_quotient(f: &SampledFunction, edge: f64, f_edge: Complex64) -> Complex64 {
    f.nodes()
        .iter()
        .zip(f.weights())
        .zip(f.values())
        .map(|((&x, &w), &v)| w * (v - f_edge) / (x - edge))
        .sum()
}

fn c1_from_parts(
    f: &SampledFunction,
    d1: &SampledFunction,
    d2: &SampledFunction,
    q: f64,
    fq: Complex64,
) -> Complex64 {
    antisymmetric_double_integral(f, d1, d2) + 2.0 * fq * edge_difference_quotient(f, q, fq)
}

/// C₁[F] for F sampled on an interval grid [-q, q]; derivatives by spectral differentiation.
pub fn c1_functional(f: &SampledFunction) -> Result<Complex64> {
    let (lo, hi) = f
        .grid()
        .support()
        .ok_or_else(|| Error::InvalidInput("C1 needs an interval grid".into()))?;
    if (lo + hi).abs() > 1e-12 * hi.abs().max(1.0) {
        return Err(Error::InvalidInput(
            "C1 needs a symmetric interval [-q, q]".into(),
        ));
    }
    let d1 = f.derivative()?;
    let d2 = d1.derivative()?;
    let fq = f.interpolate(hi)?;
    Ok(c1_from_parts(f, &d1, &d2, hi, fq))
}

/// C₁[a Z - s] with analytic derivatives of the dressed charge.
pub fn c1_dressed_charge(gs: &GroundState, a: Complex64, s: f64) -> Complex64 {
    let f = gs.z.map(|_, z| a * z - s);
    let d1 = gs.z_derivative().map(|_, z| a * z);
    let d2 = gs.z_second_derivative().map(|_, z| a * z);
    c1_from_parts(&f, &d1, &d2, gs.q, a * gs.zq - s)
}

/// ∫ (Z(μ) - 𝒵)/(μ - q) dμ for `plus`, ∫ (Z(μ) - 𝒵)/(μ + q) dμ otherwise.
pub fn edge_integral(gs: &GroundState, plus: bool) -> f64 {
    let edge = if plus { gs.q } else { -gs.q };
    edge_difference_quotient(&gs.z, edge, cr(gs.zq)).re
}

/// C₀ = α_ℓ² ∫∫ Z(λ)Z(μ)/(λ - μ - ic)² dλ dμ over [-q, q]².
pub fn c0_functional(z: &SampledFunction, alpha_ell: Complex64, c: f64) -> Complex64 {
    let x = z.nodes();
    let w = z.weights();
    let v = z.values();
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..x.len() {
        let mut row = Complex64::new(0.0, 0.0);
        for b in 0..x.len() {
            let d = x[a] - x[b] - i() * c;
            row += w[b] * v[b] / (d * d);
        }
        acc += w[a] * v[a] * row;
    }
    alpha_ell * alpha_ell * acc
}

/// Contour and θ parameters of the smooth amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothOptions {
    /// Defaults to the ellipse of [`Contour::default_for`].
    pub contour: Option<Contour>,
    pub nodes: usize,
    /// Defaults to (-q, q).
    pub theta: Option<(Complex64, Complex64)>,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        Self {
            contour: None,
            nodes: 256,
            theta: None,
        }
    }
}

/// B_s⁽⁰⁾ with the pieces it was assembled from.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothAmplitude {
    pub value: Complex64,
    pub theta: (Complex64, Complex64),
    pub contour_nodes: usize,
    pub det_u1: Complex64,
    pub det_u2: Complex64,
    pub det_k: Complex64,
    pub c0: Complex64,
    /// Smallest/largest LU pivot modulus of the two contour matrices.
    pub pivot_ratios: (f64, f64),
}

fn det_with_pivots(m: DMatrix<Complex64>) -> Result<(Complex64, f64)> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite Fredholm matrix entry".into()));
    }
    let lu = m.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows()).map(|k| u[(k, k)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((lu.determinant(), if max > 0.0 { min / max } else { 0.0 }))
}

fn max_abs_imag(contour: &Contour, grid: &Grid) -> f64 {
    match contour {
        Contour::Ellipse {
            center, semi_imag, ..
        } => center.im.abs() + semi_imag,
        Contour::Polyline { .. } => grid.nodes().iter().map(|z| z.im.abs()).fold(0.0, f64::max),
    }
}

/// B_s⁽⁰⁾[α_ℓ Z] from contour Fredholm determinants.
/// e^z - 1 without cancellation for small |z|.
pub fn expm1(z: Complex64) -> Complex64 {
    let (ex, half) = (z.re.exp(), (0.5 * z.im).sin());
    Complex64::new(
        z.re.exp_m1() * z.im.cos() - 2.0 * half * half,
        ex * z.im.sin(),
    )
}

/// e^p - e^q.
fn exp_diff(p: Complex64, q: Complex64) -> Complex64 {
    -p.exp() * expm1(q - p)
}

pub fn smooth_amplitude_with(
    gs: &GroundState,
    alpha: Complex64,
    ell: i64,
    opts: &SmoothOptions,
) -> Result<SmoothAmplitude> {
    let (q, c) = (gs.q, gs.c);
    let contour = opts
        .contour
        .clone()
        .unwrap_or_else(|| Contour::default_for(q, c));
    contour.validate_encloses(-q, q)?;
    let grid = Grid::contour(&contour, opts.nodes)?;
    let (th1, th2) = opts.theta.unwrap_or((cr(-q), cr(q)));
    for th in [th1, th2] {
        if contour.winding(th) != 1 {
            return Err(Error::Geometry(format!(
                "theta = {th} is not inside the contour"
            )));
        }
    }
    let reach = max_abs_imag(&contour, &grid)
        .max(th1.im.abs())
        .max(th2.im.abs());
    if reach >= 0.5 * c {
        return Err(Error::Geometry(format!(
            "contour reaches |Im w| = {reach}, must stay below c/2 = {}",
            0.5 * c
        )));
    }
    let a = alpha_ell(alpha, ell);
    let e2a = (2.0 * PI * i() * alpha).exp();
    let k_alpha = |x: Complex64| 1.0 / (x + i() * c) - e2a / (x - i() * c);
    let lz = |w: Complex64| cauchy_transform(&gs.z, w);

    let w = grid.nodes();
    let dw = grid.weights();
    let n = w.len();
    let mut l0 = Vec::with_capacity(n);
    let mut den1 = Vec::with_capacity(n);
    let mut den2 = Vec::with_capacity(n);
    for &x in w {
        let (lc, lp, lm) = (lz(x)?, lz(x + i() * c)?, lz(x - i() * c)?);
        l0.push(lc);
        den1.push(exp_diff(-a * lp, 2.0 * PI * i() * alpha - a * lm));
        den2.push(exp_diff(a * lm, 2.0 * PI * i() * alpha + a * lp));
    }
    if den1.iter().chain(&den2).any(|d| d.norm() == 0.0) {
        return Err(Error::Numerical(
            "vanishing denominator on the contour".into(),
        ));
    }
    let pref = 1.0 / (2.0 * PI * i());
    let mut m1 = DMatrix::<Complex64>::identity(n, n);
    let mut m2 = DMatrix::<Complex64>::identity(n, n);
    for j in 0..n {
        let e1 = -(-a * l0[j]).exp() / den1[j];
        for k in 0..n {
            let u1 = e1 * (k_alpha(w[j] - w[k]) - k_alpha(th1 - w[k]));
            let u2 = (a * l0[k]).exp() * (k_alpha(w[j] - w[k]) - k_alpha(w[j] - th2)) / den2[k];
            m1[(j, k)] += pref * u1 * dw[k];
            m2[(j, k)] += pref * u2 * dw[k];
        }
    }
    let (det_u1, p1) = det_with_pivots(m1)?;
    let (det_u2, p2) = det_with_pivots(m2)?;
    let det_k = fredholm_det(|x, y| kernel(c, x - y), &gs.grid, cr(-1.0 / (2.0 * PI)))?;
    let c0 = c0_functional(&gs.z, a, c);
    let b1 = exp_diff(
        -a * lz(th1 + i() * c)?,
        2.0 * PI * i() * alpha - a * lz(th1 - i() * c)?,
    );
    let b2 = exp_diff(
        a * lz(th2 - i() * c)?,
        2.0 * PI * i() * alpha + a * lz(th2 + i() * c)?,
    );
    let pre = expm1(2.0 * PI * i() * alpha).powi(2);
    let value = if pre == Complex64::new(0.0, 0.0) {
        pre
    } else {
        pre * (-c0).exp() * det_u1 * det_u2 / (det_k * det_k) / (b1 * b2)
    };
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Numerical(format!(
            "smooth amplitude is not finite (brackets {b1}, {b2})"
        )));
    }
    Ok(SmoothAmplitude {
        value,
        theta: (th1, th2),
        contour_nodes: n,
        det_u1,
        det_u2,
        det_k,
        c0,
        pivot_ratios: (p1, p2),
    })
}

pub fn smooth_amplitude(gs: &GroundState, alpha: Complex64, ell: i64) -> Result<Complex64> {
    Ok(smooth_amplitude_with(gs, alpha, ell, &SmoothOptions::default())?.value)
}

/// R_{n,m}({p},{h}|ν), pole-aware.
pub fn r_factor(p: &[i64], h: &[i64], nu: Complex64) -> Result<Complex64> {
    let mut poly = 1.0f64;
    for (j, &pj) in p.iter().enumerate() {
        for &pk in &p[..j] {
            poly *= ((pj - pk) as f64).powi(2);
        }
    }
    for (j, &hj) in h.iter().enumerate() {
        for &hk in &h[..j] {
            poly *= ((hj - hk) as f64).powi(2);
        }
    }
    for &pj in p {
        for &hk in h {
            let d = (pj + hk - 1) as f64;
            if d == 0.0 {
                return Err(Error::Pole {
                    function: "R factor",
                    at: Complex64::new(0.0, 0.0),
                });
            }
            poly /= d * d;
        }
    }
    let mut num = Vec::new();
    let mut den = Vec::new();
    for &pk in p {
        num.push(pk as f64 + nu);
        den.push(cr(pk as f64));
    }
    for &hk in h {
        num.push(hk as f64 - nu);
        den.push(cr(hk as f64));
    }
    let g = gamma_ratio(&GammaRatioSpec::new(num, den))?;
    Ok(poly * g * g)
}

/// B_d⁽⁰⁾ for one class; requires -π < Im u₁ < π.
pub fn discrete_amplitude(
    gs: &GroundState,
    class: &ExcitationClass,
    alpha: Complex64,
) -> Result<Complex64> {
    root_offsets(gs, class, alpha)?;
    let a = alpha_ell(alpha, class.ell);
    let az = a * gs.zq;
    let nu = az - class.ell as f64;
    let s = (PI * az).sin() / PI;
    let g = barnes_g_one(nu);
    let rp = r_factor(&class.p_plus, &class.h_plus, nu)?;
    let rm = r_factor(&class.p_minus, &class.h_minus, -nu)?;
    Ok(c1_dressed_charge(gs, a, 0.0).exp() * s.powi(2 * class.n() as i32) * g * g * rp * rm)
}

fn increasing_sets(lo: i64, hi: i64, offset: i64, budget: i64) -> Vec<(Vec<i64>, i64)> {
    fn rec(
        next: i64,
        hi: i64,
        offset: i64,
        budget: i64,
        cur: &mut Vec<i64>,
        energy: i64,
        out: &mut Vec<(Vec<i64>, i64)>,
    ) {
        out.push((cur.clone(), energy));
        for v in next..=hi {
            let e = energy + v - offset;
            if e > budget {
                break;
            }
            cur.push(v);
            rec(v + 1, hi, offset, budget, cur, e, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(lo, hi, offset, budget, &mut Vec::new(), 0, &mut out);
    out
}

/// W(ν, r) by direct summation over particle and hole sets with quantum numbers ≤ `cutoff`.
/// Configurations whose weight e^{-τE} is below 1e-18 are skipped.
pub fn w_series(nu: Complex64, r: i64, tau: f64, cutoff: i64) -> Result<Complex64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput("tau must be positive".into()));
    }
    let budget = (41.5 / tau).ceil() as i64;
    let ps = increasing_sets(1, cutoff, 1, budget);
    let hs = increasing_sets(1, cutoff, 0, budget);
    let s2 = ((PI * nu).sin() / PI).powi(2);
    let side = |set: &[i64], shift: Complex64| -> Result<Complex64> {
        let mut poly = 1.0f64;
        for (j, &x) in set.iter().enumerate() {
            for &y in &set[..j] {
                poly *= ((x - y) as f64).powi(2);
            }
        }
        let num = set.iter().map(|&x| x as f64 + shift).collect();
        let den = set.iter().map(|&x| cr(x as f64)).collect();
        let g = gamma_ratio(&GammaRatioSpec::new(num, den))?;
        Ok(poly * g * g)
    };
    let pw: Vec<Complex64> = ps.iter().map(|(s, _)| side(s, nu)).collect::<Result<_>>()?;
    let hw: Vec<Complex64> = hs
        .iter()
        .map(|(s, _)| side(s, -nu))
        .collect::<Result<_>>()?;
    let mut total = Complex64::new(0.0, 0.0);
    for (a, (p, ep)) in ps.iter().enumerate() {
        for (b, (h, eh)) in hs.iter().enumerate() {
            if p.len() as i64 - h.len() as i64 != r || ep + eh > budget {
                continue;
            }
            let mut cross = 1.0f64;
            for &x in p {
                for &y in h {
                    cross *= ((x + y - 1) as f64).powi(2);
                }
            }
            total +=
                (-tau * (ep + eh) as f64).exp() * s2.powi(h.len() as i32) * pw[a] * hw[b] / cross;
        }
    }
    Ok(total)
}

/// W(ν, r) = G²(1+r+ν)/G²(1+ν) e^{-τ r(r-1)/2} / (1 - e^{-τ})^{(ν+r)²}.
pub fn w_closed(nu: Complex64, r: i64, tau: f64) -> Result<Complex64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput("tau must be positive".into()));
    }
    let den = ln_barnes_g(1.0 + nu).ok_or(Error::Pole {
        function: "W closed form",
        at: 1.0 + nu,
    })?;
    let Some(num) = ln_barnes_g(1.0 + r as f64 + nu) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let e = nu + r as f64;
    let log =
        2.0 * (num - den) - tau * (r * (r - 1)) as f64 / 2.0 - e * e * (-(-tau).exp()).ln_1p();
    Ok(log.exp())
}

/// Ã_ℓ together with its ingredients.
#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeResult {
    pub ell: i64,
    pub alpha: Complex64,
    pub b_smooth: Complex64,
    /// B_d⁽⁰⁾ of the lowest class of the sector, when the constraint allows it.
    pub b_discrete_class: Option<Complex64>,
    pub a_tilde: Complex64,
    /// 2α_ℓ²𝒵².
    pub exponent: Complex64,
    pub smooth: SmoothAmplitude,
}

/// Ã_ℓ without the (-π, π) gate; the value depends on α only through α_ℓ and e^{2πiα}.
pub fn amplitude_tilde_unconstrained(
    gs: &GroundState,
    alpha: Complex64,
    ell: i64,
    opts: &SmoothOptions,
) -> Result<AmplitudeResult> {
    let a = alpha_ell(alpha, ell);
    let smooth = smooth_amplitude_with(gs, alpha, ell, opts)?;
    let az = a * gs.zq;
    let exponent = 2.0 * az * az;
    let g = barnes_g_one(az);
    let a_tilde = smooth.value * g * g * c1_dressed_charge(gs, a, 0.0).exp()
        / (exponent * (2.0 * gs.q * gs.zq).ln()).exp();
    let b_discrete_class = discrete_amplitude(gs, &ExcitationClass::lowest(ell), alpha).ok();
    Ok(AmplitudeResult {
        ell,
        alpha,
        b_smooth: smooth.value,
        b_discrete_class,
        a_tilde,
        exponent,
        smooth,
    })
}

/// Ã_ℓ for a representative (α, ℓ) with -π < Im u₁ < π.
pub fn amplitude_tilde(gs: &GroundState, alpha: Complex64, ell: i64) -> Result<AmplitudeResult> {
    let u1 = u1_at_q(gs, alpha, ell);
    if !(u1.im > -PI && u1.im < PI) {
        return Err(Error::Constraint {
            im_u1: u1.im,
            suggested_shift: -crate::excitation::constraint_shift(u1),
        });
    }
    amplitude_tilde_unconstrained(gs, alpha, ell, &SmoothOptions::default())
}

/// |qε₀′/(iπT)|^{2α_ℓ²𝒵²} for real α.
pub fn discrete_weight(gs: &GroundState, alpha_ell: Complex64, t: f64) -> Result<f64> {
    if alpha_ell.im != 0.0 {
        return Err(Error::InvalidInput(
            "the low-temperature weight is only defined for real alpha".into(),
        ));
    }
    let e = 2.0 * (alpha_ell.re * gs.zq).powi(2);
    Ok((gs.q * gs.eps0_prime_q / (PI * t)).powf(e))
}

/// ∫∫ z(λ)z(μ)/(λ - μ_+)² on the real axis through the exactly regularised form
/// ½∫∫ [z′(λ)z(μ) - z(λ)z′(μ)]/(λ - μ).
pub fn double_integral_real(sol: &ExcitedSolution) -> Result<Complex64> {
    let (z, d1, d2) = z_with_derivatives(sol)?;
    Ok(antisymmetric_double_integral(&z, &d1, &d2))
}

/// ∫ z(μ) L[z′](μ + iδ) dμ, the double integral with an explicit offset δ.
pub fn double_integral_offset(
    z: &SampledFunction,
    dz: &SampledFunction,
    delta: f64,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for ((&mu, &w), &v) in z.nodes().iter().zip(z.weights()).zip(z.values()) {
        acc += w * v * cauchy_transform(dz, mu + i() * delta)?;
    }
    Ok(acc)
}

/// Offset route with Richardson extrapolation over δ and δ/2.
pub fn double_integral_richardson(sol: &ExcitedSolution, delta: f64) -> Result<Complex64> {
    let (z, d1, _) = z_with_derivatives(sol)?;
    let a1 = double_integral_offset(&z, &d1, delta)?;
    let a2 = double_integral_offset(&z, &d1, 0.5 * delta)?;
    Ok(2.0 * a2 - a1)
}

/// (det 1/(ŝ⁺_j - ŝ⁻_k))² by the Cauchy product formula.
pub fn cauchy_determinant_squared(plus: &[Complex64], minus: &[Complex64]) -> Result<Complex64> {
    if plus.len() != minus.len() {
        return Err(Error::InvalidInput(
            "Cauchy determinant needs equal root counts".into(),
        ));
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for j in 0..plus.len() {
        for k in 0..j {
            let a = plus[j] - plus[k];
            let b = minus[j] - minus[k];
            acc *= a * a * b * b;
        }
    }
    for &a in plus {
        for &b in minus {
            let d = a - b;
            acc /= d * d;
        }
    }
    Ok(acc)
}

/// T → 0 limit of (T^{n-ℓ²} det 1/(ŝ⁺ - ŝ⁻))² for a class.
pub fn cauchy_determinant_limit(gs: &GroundState, class: &ExcitationClass) -> Complex64 {
    let e = gs.eps0_prime_q;
    let n = class.n();
    let ell = class.ell;
    let side = |p: &[i64], h: &[i64]| -> f64 {
        let mut v = 1.0f64;
        for (j, &x) in p.iter().enumerate() {
            for &y in &p[..j] {
                v *= ((x - y) as f64).powi(2);
            }
        }
        for (j, &x) in h.iter().enumerate() {
            for &y in &h[..j] {
                v *= ((x - y) as f64).powi(2);
            }
        }
        for &x in p {
            for &y in h {
                v /= ((x + y - 1) as f64).powi(2);
            }
        }
        v
    };
    let sign = if (n + ell).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    cr(sign
        * (gs.q * e / PI).powi(-2 * (ell * ell) as i32)
        * (e / (2.0 * PI)).powi(2 * n as i32)
        * side(&class.p_plus, &class.h_plus)
        * side(&class.p_minus, &class.h_minus))
}

/// T ∂_λ e^{-2πiz} at a root, using 1 + e^{-u/T} = 0 there.
fn root_derivative(sol: &ExcitedSolution, s: Complex64) -> Complex64 {
    let t = sol.t();
    -sol.u_d1_at(s) / (1.0 + (-sol.thermal.eps_at(s) / t).exp())
}

/// Finite-temperature discrete factor and its pieces.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteFiniteT {
    pub value: Complex64,
    pub double_integral: Complex64,
    pub cauchy_det_sq: Complex64,
    /// Π e^{2L(ŝ⁻) - 2L(ŝ⁺)}.
    pub cauchy_factors: Complex64,
    /// Π [∂e^{-2πiz}(ŝ⁻) ∂e^{-2πiz}(ŝ⁺)]^{-1}.
    pub derivative_factors: Complex64,
}

/// B_d[u] on the real axis.
pub fn bd_finite_t(sol: &ExcitedSolution) -> Result<DiscreteFiniteT> {
    let t = sol.t();
    let z = z_function(&sol.thermal, &sol.u)?;
    let double_integral = double_integral_real(sol)?;
    let plus = sol.roots.plus();
    let minus = sol.roots.minus();
    let cauchy_det_sq = cauchy_determinant_squared(&plus, &minus)?;
    let mut logs = Complex64::new(0.0, 0.0);
    let mut derivative_factors = Complex64::new(1.0, 0.0);
    for &s in &minus {
        logs += 2.0 * cauchy_transform(&z, s)?;
        derivative_factors /= root_derivative(sol, s) / t;
    }
    for &s in &plus {
        logs -= 2.0 * cauchy_transform(&z, s)?;
        derivative_factors /= root_derivative(sol, s) / t;
    }
    let cauchy_factors = logs.exp();
    Ok(DiscreteFiniteT {
        value: double_integral.exp() * cauchy_det_sq * cauchy_factors * derivative_factors,
        double_integral,
        cauchy_det_sq,
        cauchy_factors,
        derivative_factors,
    })
}

/// One root of the Cauchy-transform edge comparison.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeEntry {
    pub root: PlacedRoot,
    pub canonical_quantum: i64,
    pub numeric: Complex64,
    pub predicted: Complex64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeReport {
    pub t: f64,
    pub entries: Vec<EdgeEntry>,
    pub max_deviation: f64,
}

/// Compares e^{L[z](ŝ)}(qε₀′/πT)^{±ν} with its Gamma-ratio limit for every root.
/// Everything is expressed in the canonical frame where ν = u₁/2πi has |Re ν| < 1/2.
pub fn verify_cauchy_edge(sol: &ExcitedSolution) -> Result<EdgeReport> {
    let gs = sol.ground();
    let t = sol.t();
    let (class, alpha) = sol.canonical()?;
    let a = alpha_ell(alpha, class.ell);
    let u1 = u1_at_q(gs, alpha, class.ell);
    let nu = u1 / (2.0 * PI * i());
    let weight = gs.q * gs.eps0_prime_q / (PI * t);
    let z = z_function(&sol.thermal, &sol.u)?;
    let (ep, em) = (edge_integral(gs, true), edge_integral(gs, false));
    let mut entries = Vec::new();
    for r in &sol.roots.roots {
        let k = r.canonical_quantum(sol.winding_shift);
        let kf = cr(k as f64);
        let (sgn, e) = match r.branch {
            Branch::Right => (1.0, ep),
            Branch::Left => (-1.0, em),
        };
        // The ±u₁/4 signs are the ones consistent with the product over all roots
        // (e^{+2πinα_ℓ𝒵} there); see the ledger note on the edge limits.
        let (quarter, ratio) = match r.kind {
            RootKind::Particle => (
                u1 / 4.0,
                gamma_ratio(&GammaRatioSpec::new(vec![kf], vec![kf - sgn * nu]))?,
            ),
            RootKind::Hole => (
                -u1 / 4.0,
                gamma_ratio(&GammaRatioSpec::new(vec![kf + sgn * nu], vec![kf]))?,
            ),
        };
        let predicted = (-a * e + quarter).exp() * ratio;
        let numeric = (cauchy_transform(&z, r.position)? + sgn * nu * weight.ln()).exp();
        let deviation = (numeric / predicted - 1.0).norm();
        entries.push(EdgeEntry {
            root: *r,
            canonical_quantum: k,
            numeric,
            predicted,
            deviation,
        });
    }
    let max_deviation = entries.iter().map(|e| e.deviation).fold(0.0, f64::max);
    Ok(EdgeReport {
        t,
        entries,
        max_deviation,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DoubleIntegralReport {
    pub t: f64,
    pub numeric: Complex64,
    pub predicted: Complex64,
    /// |A - prediction|, reduced modulo 2πi.
    pub deviation: f64,
}

/// Compares A with C₁[u₁/2πi] - 2(u₁/2πi)² ln(qε₀′/πT) + 2 ln G(1, u₁/2πi).
pub fn verify_double_integral(sol: &ExcitedSolution) -> Result<DoubleIntegralReport> {
    let gs = sol.ground();
    let t = sol.t();
    let (class, alpha) = sol.canonical()?;
    let a = alpha_ell(alpha, class.ell);
    let nu = u1_at_q(gs, alpha, class.ell) / (2.0 * PI * i());
    let numeric = double_integral_real(sol)?;
    let lg = match (ln_barnes_g(1.0 + nu), ln_barnes_g(1.0 - nu)) {
        (Some(x), Some(y)) => x + y,
        _ => {
            return Err(Error::Pole {
                function: "G(1, nu)",
                at: nu,
            })
        }
    };
    let predicted = c1_dressed_charge(gs, a, class.ell as f64)
        - 2.0 * nu * nu * (gs.q * gs.eps0_prime_q / (PI * t)).ln()
        + 2.0 * lg;
    let mut d = numeric - predicted;
    d -= 2.0 * PI * i() * (d.im / (2.0 * PI)).round();
    Ok(DoubleIntegralReport {
        t,
        numeric,
        predicted,
        deviation: d.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excitation::{solve_u_with, ExcitedConfig};
    use crate::model::ModelParams;
    use crate::thermal::{ThermalConfig, ThermalSolution};
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gs(cc: f64, h: f64) -> GroundState {
        GroundState::build(&ModelParams::ground(cc, h).unwrap()).unwrap()
    }

    #[test]
    fn c1_oracles() {
        let g = Arc::new(Grid::gauss_legendre(64, -1.0, 1.0).unwrap());
        let one = SampledFunction::from_fn(g.clone(), |_| c(3.0, 0.0)).unwrap();
        assert!(c1_functional(&one).unwrap().norm() < 1e-13);
        let lin = SampledFunction::from_fn(g, |x| x).unwrap();
        assert!((c1_functional(&lin).unwrap() - 2.0).norm() < 1e-12);
    }

    #[test]
    fn c1_spectral_and_analytic_routes_agree() {
        let g = gs(1.0, 1.0);
        let a = c(0.7, 0.1);
        let f = g.z.map(|_, z| a * z);
        let d = (c1_functional(&f).unwrap() - c1_dressed_charge(&g, a, 0.0)).norm();
        assert!(d < 1e-9, "{d}");
    }

    #[test]
    fn c1_shift_identity() {
        let g = gs(1.0, 1.0);
        for (a, l) in [(c(1.2, 0.0), 1i64), (c(-0.3, 0.0), -1), (c(2.1, 0.2), 2)] {
            let lhs = c1_dressed_charge(&g, a, l as f64);
            let rhs = c1_dressed_charge(&g, a, 0.0) - 4.0 * l as f64 * a * edge_integral(&g, true);
            assert!((lhs - rhs).norm() < 1e-9, "{lhs} {rhs}");
        }
    }

    #[test]
    fn c0_oracles() {
        let g = gs(1.0, 1.0);
        assert_eq!(c0_functional(&g.z, c(0.0, 0.0), 1.0), c(0.0, 0.0));
        let one = g.z.map(|_, _| c(1.0, 0.0));
        let q = g.q;
        let exact = (1.0 / (4.0 * q * q + 1.0)).ln();
        assert!((c0_functional(&one, c(1.0, 0.0), 1.0) - exact).norm() < 1e-12);
        for cc in [0.5, 3.0] {
            let v = c0_functional(&g.z, c(0.6, 0.0), cc);
            let bound = 0.36 * g.z.integral().norm().powi(2) / (cc * cc);
            assert!(v.norm() <= bound);
        }
    }

    #[test]
    fn smooth_amplitude_limits() {
        let g = gs(1.0, 1.0);
        let near = smooth_amplitude(&g, c(1e-4, 0.0), 0).unwrap();
        assert!((near - 1.0).norm() < 1e-3, "{near}");
        assert_eq!(smooth_amplitude(&g, c(0.0, 0.0), 1).unwrap(), c(0.0, 0.0));
        // B_s ≈ α²F(α) with F′(0) of order 1e4, so the step must be small.
        let h = 1e-6;
        let d = (smooth_amplitude(&g, c(h, 0.0), 1).unwrap()
            - smooth_amplitude(&g, c(-h, 0.0), 1).unwrap())
            / (2.0 * h);
        assert!(d.norm() <= 1e-6, "{d}");
    }

    #[test]
    fn smooth_amplitude_theta_independence() {
        let g = gs(1.0, 1.0);
        let q = g.q;
        let a = smooth_amplitude(&g, c(0.2, 0.0), 1).unwrap();
        let opts = SmoothOptions {
            theta: Some((c(-q, 0.1 * q), c(q, -0.1 * q))),
            ..Default::default()
        };
        let b = smooth_amplitude_with(&g, c(0.2, 0.0), 1, &opts)
            .unwrap()
            .value;
        assert!(((a - b) / a).norm() <= 1e-6, "{a} {b}");
    }

    #[test]
    fn smooth_amplitude_conjugation() {
        let g = gs(1.0, 1.0);
        for (a, l) in [(0.2, 0), (0.3, 1), (-0.15, -1)] {
            let x = smooth_amplitude(&g, c(a, 0.0), l).unwrap();
            let y = smooth_amplitude(&g, c(-a, 0.0), -l).unwrap();
            assert!((x - y.conj()).norm() <= 1e-8 * x.norm().max(1.0), "{x} {y}");
        }
    }

    #[test]
    fn smooth_amplitude_geometry_errors() {
        let g = gs(1.0, 1.0);
        let opts = SmoothOptions {
            contour: Some(Contour::Ellipse {
                center: c(0.0, 0.0),
                semi_real: 1.4 * g.q,
                semi_imag: 0.6,
            }),
            ..Default::default()
        };
        assert!(matches!(
            smooth_amplitude_with(&g, c(0.2, 0.0), 0, &opts),
            Err(Error::Geometry(_))
        ));
        let opts = SmoothOptions {
            theta: Some((c(-3.0, 0.0), c(g.q, 0.0))),
            ..Default::default()
        };
        assert!(matches!(
            smooth_amplitude_with(&g, c(0.2, 0.0), 0, &opts),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn r_factor_values() {
        let nu = c(0.5, 0.0);
        let v = r_factor(&[1], &[1], nu).unwrap();
        assert!((v - PI * PI / 4.0).norm() < 1e-13);
        let nu = c(0.37, 0.0);
        let v = r_factor(&[1], &[1], nu).unwrap();
        let e = (PI * 0.37 / (PI * 0.37).sin()).powi(2);
        assert!((v - e).norm() < 1e-12);
        assert!((r_factor(&[1], &[1], c(1e-9, 0.0)).unwrap() - 1.0).norm() < 1e-8);
        assert_eq!(r_factor(&[], &[], nu).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn discrete_amplitude_empty_class() {
        let g = gs(1.0, 1.0);
        let a = c(0.2, 0.0);
        let v = discrete_amplitude(&g, &ExcitationClass::empty(), a).unwrap();
        let gg = barnes_g_one(a * g.zq);
        let e = c1_dressed_charge(&g, a, 0.0).exp() * gg * gg;
        assert!((v - e).norm() <= 1e-14 * e.norm());
    }

    #[test]
    fn discrete_amplitude_relabelling_invariance() {
        let g = gs(1.0, 1.0);
        // Same real-axis data in two labellings.
        let a = ExcitationClass::new(1, vec![1], vec![], vec![], vec![1]).unwrap();
        let b = ExcitationClass::new(2, vec![1, 2], vec![], vec![], vec![1, 2]).unwrap();
        assert!(discrete_amplitude(&g, &a, c(0.0, 0.0)).is_err());
        let vb = discrete_amplitude(&g, &b, c(-1.0, 0.0)).unwrap();
        // Evaluate the first labelling ungated through its ingredients.
        let nu = g.zq - 1.0;
        let s = (PI * g.zq).sin() / PI;
        let gg = barnes_g_one(c(nu, 0.0));
        let va = c1_dressed_charge(&g, c(1.0, 0.0), 0.0).exp()
            * s
            * s
            * gg
            * gg
            * r_factor(&[1], &[], c(nu, 0.0)).unwrap()
            * r_factor(&[], &[1], c(-nu, 0.0)).unwrap();
        assert!((va - vb).norm() <= 1e-10 * va.norm(), "{va} {vb}");
    }

    #[test]
    fn w_series_matches_closed_form() {
        assert_eq!(w_series(c(0.3, 0.0), 0, 1.0, 0).unwrap(), c(1.0, 0.0));
        assert!((w_series(c(0.0, 0.0), 0, 1.3, 10).unwrap() - 1.0).norm() < 1e-15);
        assert_eq!(w_closed(c(0.0, 0.0), 0, 2.0).unwrap(), c(1.0, 0.0));
        let t = 0.7f64;
        assert!((w_closed(c(0.0, 0.0), 1, t).unwrap() - 1.0 / (1.0 - (-t).exp())).norm() < 1e-13);
        let rel = |nu, r, tau, cut| {
            let a = w_series(nu, r, tau, cut).unwrap();
            let b = w_closed(nu, r, tau).unwrap();
            ((a - b) / b).norm()
        };
        assert!(rel(c(0.3, 0.0), 1, 2.0, 12) < 1e-8);
        assert!(rel(c(0.3, 0.0), -1, 1.5, 14) < 1e-8);
        for nu in [c(0.3, 0.0), c(-0.25, 0.1)] {
            for r in -1..=2 {
                for tau in [1.0, 2.0] {
                    let e = rel(nu, r, tau, 60);
                    assert!(e < 1e-8, "nu={nu} r={r} tau={tau}: {e}");
                }
            }
        }
    }

    #[test]
    fn amplitude_tilde_basics() {
        let g = gs(1.0, 1.0);
        let r = amplitude_tilde(&g, c(1e-5, 0.0), 0).unwrap();
        assert!((r.a_tilde - 1.0).norm() < 1e-3);
        let a =
            amplitude_tilde_unconstrained(&g, c(0.2, 0.0), 1, &SmoothOptions::default()).unwrap();
        let b =
            amplitude_tilde_unconstrained(&g, c(1.2, 0.0), 0, &SmoothOptions::default()).unwrap();
        assert!((a.a_tilde - b.a_tilde).norm() <= 1e-10 * a.a_tilde.norm());
        assert!(matches!(
            amplitude_tilde(&g, c(0.2, 0.0), 1),
            Err(Error::Constraint { .. })
        ));
        let f = gs(1e6, 1.0);
        let r = amplitude_tilde(&f, c(0.1, 0.0), 0).unwrap();
        assert!((r.exponent - 0.02).norm() < 1e-4);
    }

    fn benchmark(t: f64) -> ExcitedSolution {
        let g = Arc::new(gs(1.0, 1.0));
        let th = Arc::new(ThermalSolution::solve_with(g, t, ThermalConfig::default()).unwrap());
        let k = ExcitationClass::new(1, vec![1], vec![], vec![], vec![1]).unwrap();
        solve_u_with(th, &k, c(0.0, 0.0), ExcitedConfig::default()).unwrap()
    }

    #[test]
    fn double_integral_routes_agree() {
        let sol = benchmark(0.01);
        let exact = double_integral_real(&sol).unwrap();
        let (z, _, _) = z_with_derivatives(&sol).unwrap();
        let x = z.nodes();
        let h = x
            .windows(2)
            .map(|w| (w[1] - w[0]).re)
            .fold(f64::INFINITY, f64::min);
        let rich = double_integral_richardson(&sol, 2.0 * h).unwrap();
        assert!(
            (exact - rich).norm() < 1e-3 * exact.norm(),
            "{exact} {rich}"
        );
    }

    #[test]
    fn empty_class_finite_t_is_trivial() {
        let g = Arc::new(gs(1.0, 1.0));
        let th = Arc::new(ThermalSolution::solve_with(g, 0.01, ThermalConfig::default()).unwrap());
        let sol = solve_u_with(
            th,
            &ExcitationClass::empty(),
            c(0.0, 0.0),
            ExcitedConfig::default(),
        )
        .unwrap();
        assert!((bd_finite_t(&sol).unwrap().value - 1.0).norm() < 1e-9);
        assert_eq!(verify_cauchy_edge(&sol).unwrap().max_deviation, 0.0);
        let d = verify_double_integral(&sol).unwrap();
        assert!(d.numeric.norm() < 1e-9 && d.predicted.norm() < 1e-12);
    }

    #[test]
    fn cauchy_determinant_leading_form() {
        let rel = |t: f64| {
            let sol = benchmark(t);
            let (class, _) = sol.canonical().unwrap();
            let b = bd_finite_t(&sol).unwrap();
            let pw = (t.powi((class.n() - class.ell * class.ell) as i32)).powi(2);
            let lim = cauchy_determinant_limit(sol.ground(), &class);
            let p = sol.roots.plus();
            let m = sol.roots.minus();
            let mat = DMatrix::from_fn(p.len(), p.len(), |j, k| 1.0 / (p[j] - m[k]));
            let d = mat.determinant();
            assert!((d * d - b.cauchy_det_sq).norm() < 1e-10 * b.cauchy_det_sq.norm());
            (b.cauchy_det_sq * pw / lim - 1.0).norm()
        };
        // The canonical labelling carries two roots per Fermi point, so the O(T)
        // corrections from four cross-series factors add up.
        let (a, b) = (rel(0.01), rel(0.005));
        assert!(b < 0.1, "{b}");
        assert!((a / b - 2.0).abs() < 0.2, "{a} {b}");
    }

    #[test]
    fn cauchy_edge_limits() {
        let a = verify_cauchy_edge(&benchmark(0.01)).unwrap();
        let b = verify_cauchy_edge(&benchmark(0.005)).unwrap();
        assert_eq!(a.entries.len(), 4);
        assert!(a.max_deviation <= 0.15, "{}", a.max_deviation);
        let r = b.max_deviation / a.max_deviation;
        assert!((0.3..=0.8).contains(&r), "{r}");
    }

    #[test]
    fn double_integral_limit() {
        let devs: Vec<f64> = [0.02, 0.01, 0.005]
            .iter()
            .map(|&t| verify_double_integral(&benchmark(t)).unwrap().deviation)
            .collect();
        assert!(devs[1] <= 0.15, "{devs:?}");
        assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
    }

    #[test]
    fn discrete_factor_converges() {
        let ts = [0.02, 0.01, 0.005];
        let mut rel = Vec::new();
        for &t in &ts {
            let sol = benchmark(t);
            let (k, a) = sol.canonical().unwrap();
            let g = sol.ground();
            let w = discrete_weight(g, alpha_ell(a, k.ell), t).unwrap();
            let lim = discrete_amplitude(g, &k, a).unwrap();
            rel.push((bd_finite_t(&sol).unwrap().value * w / lim - 1.0).norm());
        }
        let e = crate::numerics::fit::log_log_slope(&ts, &rel).unwrap();
        assert!(e >= 0.7, "{rel:?} {e}");
    }
}
