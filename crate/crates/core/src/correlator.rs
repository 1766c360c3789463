//! Long-distance, low-temperature asymptotic series of the generating function and of the
//! density-density correlator.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::amplitude::{amplitude_tilde_unconstrained, SmoothOptions};
use crate::error::{Error, Result};
use crate::excitation::alpha_ell;
use crate::groundstate::GroundState;

/// Relative tolerance of the Richardson consistency check on ∂²_α.
pub const RICHARDSON_TOLERANCE: f64 = 1e-4;
/// Default α step for the second derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-3;
/// Default harmonic cutoff.
pub const DEFAULT_ELL_MAX: i64 = 2;
/// T/h above which the low-temperature series is not assembled.
pub const TEMPERATURE_GATE: f64 = 0.05;

/// ln(πT/v₀) - ln sinh(πTx/v₀), stable for large arguments.
pub fn log_envelope_base(v0: f64, x: f64, t: f64) -> f64 {
    let a = PI * t * x / v0;
    let ln_sinh = if a > 20.0 {
        a - std::f64::consts::LN_2 + (-(-2.0 * a).exp()).ln_1p()
    } else {
        a.sinh().ln()
    };
    (PI * t / v0).ln() - ln_sinh
}

/// (πT/v₀ / sinh(πTx/v₀))^e.
pub fn envelope(v0: f64, x: f64, t: f64, e: Complex64) -> Complex64 {
    (e * log_envelope_base(v0, x, t)).exp()
}

/// One harmonic of the generating-function series.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticTerm {
    pub ell: i64,
    /// 2α_ℓk_F.
    pub oscillation: Complex64,
    /// 2α_ℓ²𝒵².
    pub exponent: Complex64,
    /// Ã_ℓ.
    pub amplitude: Complex64,
    pub envelope: Complex64,
    /// e^{2iα_ℓk_Fx} · envelope · Ã_ℓ.
    pub value: Complex64,
}

/// Sum of the harmonics with |ℓ| ≤ ℓ_max, terms ordered by decreasing |envelope|.
#[derive(Debug, Clone, Serialize)]
pub struct GeneratingSeries {
    pub alpha: Complex64,
    pub x: f64,
    pub t: f64,
    pub value: Complex64,
    pub terms: Vec<AsymptoticTerm>,
}

impl GeneratingSeries {
    pub fn term(&self, ell: i64) -> Option<&AsymptoticTerm> {
        self.terms.iter().find(|t| t.ell == ell)
    }

    /// The same series at another (x, T), reusing the amplitudes.
    pub fn at(&self, gs: &GroundState, x: f64, t: f64) -> Result<GeneratingSeries> {
        check_point(x, t)?;
        let mut sectors: Vec<(i64, Complex64)> =
            self.terms.iter().map(|t| (t.ell, t.amplitude)).collect();
        sectors.sort_by_key(|&(l, _)| (l.abs(), l));
        Ok(series_from_amplitudes(
            gs,
            self.alpha,
            x,
            t,
            sectors.into_iter(),
        ))
    }
}

fn check_point(x: f64, t: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "distance must be positive, got {x}"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "temperature must be positive, got {t}"
        )));
    }
    Ok(())
}

/// Ã_ℓ, with the α_ℓ = 0 sector set to its exact value 1.
fn amplitude_or_identity(
    gs: &GroundState,
    alpha: Complex64,
    ell: i64,
    opts: &SmoothOptions,
) -> Result<Complex64> {
    if alpha_ell(alpha, ell) == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok(amplitude_tilde_unconstrained(gs, alpha, ell, opts)?.a_tilde)
}

/// Sectors in summation order: ascending |ℓ|, negative before positive.
pub fn sectors(ell_max: i64) -> Vec<i64> {
    let mut v = vec![0];
    for l in 1..=ell_max {
        v.push(-l);
        v.push(l);
    }
    v
}

/// Evaluates `f` on every sector in parallel and returns the results in sector order.
fn per_sector<T: Send, F: Fn(i64) -> Result<T> + Sync>(ells: &[i64], f: F) -> Result<Vec<T>> {
    std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = ells.iter().map(|&l| s.spawn(move || f(l))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sector worker panicked"))
            .collect()
    })
}

pub fn generating_asymptotics_with(
    gs: &GroundState,
    alpha: Complex64,
    x: f64,
    t: f64,
    ell_max: i64,
    opts: &SmoothOptions,
) -> Result<GeneratingSeries> {
    check_point(x, t)?;
    if ell_max < 0 {
        return Err(Error::InvalidInput("ell_max must be non-negative".into()));
    }
    let ells = sectors(ell_max);
    let amps = per_sector(&ells, |l| amplitude_or_identity(gs, alpha, l, opts))?;
    Ok(series_from_amplitudes(
        gs,
        alpha,
        x,
        t,
        ells.into_iter().zip(amps),
    ))
}

/// Sums the sectors in summation order and then sorts the terms by decreasing |envelope|.
fn series_from_amplitudes(
    gs: &GroundState,
    alpha: Complex64,
    x: f64,
    t: f64,
    sectors: impl Iterator<Item = (i64, Complex64)>,
) -> GeneratingSeries {
    let i = Complex64::new(0.0, 1.0);
    let mut terms: Vec<AsymptoticTerm> = sectors
        .map(|(ell, amplitude)| {
            let a = alpha_ell(alpha, ell);
            let exponent = 2.0 * (a * gs.zq).powi(2);
            let oscillation = 2.0 * a * gs.kf;
            let env = envelope(gs.v0, x, t, exponent);
            AsymptoticTerm {
                ell,
                oscillation,
                exponent,
                amplitude,
                envelope: env,
                value: (i * oscillation * x).exp() * env * amplitude,
            }
        })
        .collect();
    let value = terms.iter().map(|t| t.value).sum();
    terms.sort_by(|a, b| b.envelope.norm().total_cmp(&a.envelope.norm()));
    GeneratingSeries {
        alpha,
        x,
        t,
        value,
        terms,
    }
}

/// Σ_ℓ e^{2iα_ℓk_Fx}(πT/v₀ / sinh(πTx/v₀))^{2α_ℓ²𝒵²} Ã_ℓ over |ℓ| ≤ ℓ_max.
pub fn generating_asymptotics(
    gs: &GroundState,
    alpha: Complex64,
    x: f64,
    t: f64,
    ell_max: i64,
) -> Result<GeneratingSeries> {
    generating_asymptotics_with(gs, alpha, x, t, ell_max, &SmoothOptions::default())
}

/// Second α-derivative at α = 0 from central differences with one Richardson step.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SecondDerivative {
    pub value: Complex64,
    pub step: f64,
    /// |R(h, h/2) - R(h/2, h/4)| relative to the largest of |R(h/2, h/4)|, |D(h)|, |D(h/2)|.
    pub richardson_disagreement: f64,
}

/// ∂²_α f at 0, given f(0). The value uses steps h and h/2; a second refinement with h/4
/// checks for the noise floor.
pub fn second_derivative_at_zero<F: Fn(f64) -> Result<Complex64>>(
    f: F,
    f0: Complex64,
    step: f64,
) -> Result<SecondDerivative> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let d = |h: f64| -> Result<Complex64> { Ok((f(h)? - 2.0 * f0 + f(-h)?) / (h * h)) };
    let (d1, d2, d4) = (d(step)?, d(step / 2.0)?, d(step / 4.0)?);
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d4 - d2) / 3.0;
    // Measured against the raw quotients too, so a vanishing derivative is not flagged.
    let scale = r2.norm().max(d1.norm()).max(d2.norm());
    let disagreement = if scale == 0.0 {
        (r1 - r2).norm()
    } else {
        (r1 - r2).norm() / scale
    };
    if !(disagreement <= RICHARDSON_TOLERANCE) {
        return Err(Error::Numerical(format!(
            "finite-difference step {step} hits the noise floor (Richardson disagreement {disagreement:e})"
        )));
    }
    Ok(SecondDerivative {
        value: r1,
        step,
        richardson_disagreement: disagreement,
    })
}

/// A_ℓ = (D²ℓ²/2) ∂²_α Ã_ℓ|_{α=0} with its finite-difference diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicAmplitude {
    pub ell: i64,
    pub amplitude: Complex64,
    /// 2ℓ²𝒵².
    pub exponent: f64,
    pub second_derivative: SecondDerivative,
    /// (Ã_ℓ(h) - Ã_ℓ(-h)) / 2h, zero up to O(h²) because ∂_αÃ_ℓ vanishes at α = 0.
    pub odd_part: Complex64,
}

/// A_ℓ for 1 ≤ |ℓ| ≤ ℓ_max, ordered by ascending |ℓ| and then sign. These do not depend on
/// x or T and can be reused across a sweep.
pub fn harmonic_amplitudes_with(
    gs: &GroundState,
    ell_max: i64,
    step: f64,
    opts: &SmoothOptions,
) -> Result<Vec<HarmonicAmplitude>> {
    if ell_max < 0 {
        return Err(Error::InvalidInput("ell_max must be non-negative".into()));
    }
    let ells: Vec<i64> = sectors(ell_max).into_iter().filter(|&l| l != 0).collect();
    let d2 = gs.density * gs.density;
    per_sector(&ells, |ell| {
        let at = |a: f64| -> Result<Complex64> {
            Ok(amplitude_tilde_unconstrained(gs, Complex64::new(a, 0.0), ell, opts)?.a_tilde)
        };
        // Ã_ℓ(0) = 0 for ℓ ≠ 0 through the (e^{2πiα} - 1)² prefactor.
        let sd = second_derivative_at_zero(at, Complex64::new(0.0, 0.0), step)?;
        let odd_part = (at(step)? - at(-step)?) / (2.0 * step);
        let l2 = (ell * ell) as f64;
        Ok(HarmonicAmplitude {
            ell,
            amplitude: 0.5 * d2 * l2 * sd.value,
            exponent: 2.0 * l2 * gs.zq * gs.zq,
            second_derivative: sd,
            odd_part,
        })
    })
}

pub fn harmonic_amplitudes(gs: &GroundState, ell_max: i64) -> Result<Vec<HarmonicAmplitude>> {
    harmonic_amplitudes_with(gs, ell_max, DEFAULT_FD_STEP, &SmoothOptions::default())
}

/// One oscillating harmonic evaluated at a point.
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicTerm {
    pub ell: i64,
    pub amplitude: Complex64,
    pub exponent: f64,
    pub envelope: f64,
    /// A_ℓ e^{2iℓk_Fx} · envelope.
    pub value: Complex64,
}

/// D² - (T𝒵/v₀)²/(2 sinh²(πTx/v₀)) + Σ_{ℓ≠0} A_ℓ e^{2iℓk_Fx}(πT/v₀ / sinh(πTx/v₀))^{2ℓ²𝒵²}.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelatorSeries {
    pub x: f64,
    pub t: f64,
    /// D².
    pub constant: f64,
    pub ell0_term: f64,
    pub oscillating: Vec<HarmonicTerm>,
    pub total: Complex64,
}

impl CorrelatorSeries {
    pub fn harmonic(&self, ell: i64) -> Option<&HarmonicTerm> {
        self.oscillating.iter().find(|h| h.ell == ell)
    }

    /// Total restricted to |ℓ| ≤ ell_max.
    pub fn truncated(&self, ell_max: i64) -> Complex64 {
        let osc: Complex64 = self
            .oscillating
            .iter()
            .filter(|h| h.ell.abs() <= ell_max)
            .map(|h| h.value)
            .sum();
        self.constant + self.ell0_term + osc
    }
}

/// -(T𝒵/v₀)² / (2 sinh²(πTx/v₀)).
pub fn ell0_closed_form(gs: &GroundState, x: f64, t: f64) -> f64 {
    let a = PI * t * x / gs.v0;
    let s = a.sinh();
    -(t * gs.zq / gs.v0).powi(2) / (2.0 * s * s)
}

fn check_gate(gs: &GroundState, t: f64) -> Result<()> {
    let gate = TEMPERATURE_GATE * gs.h;
    if t > gate {
        return Err(Error::TemperatureGate { t, gate });
    }
    Ok(())
}

/// Assembles the correlator at (x, T) from precomputed harmonic amplitudes.
pub fn assemble_correlator(
    gs: &GroundState,
    harmonics: &[HarmonicAmplitude],
    x: f64,
    t: f64,
) -> Result<CorrelatorSeries> {
    check_point(x, t)?;
    check_gate(gs, t)?;
    let constant = gs.density * gs.density;
    let ell0_term = ell0_closed_form(gs, x, t);
    let base = log_envelope_base(gs.v0, x, t);
    let i = Complex64::new(0.0, 1.0);
    let oscillating: Vec<HarmonicTerm> = harmonics
        .iter()
        .map(|h| {
            let env = (h.exponent * base).exp();
            let phase = (i * (2.0 * h.ell as f64 * gs.kf * x)).exp();
            HarmonicTerm {
                ell: h.ell,
                amplitude: h.amplitude,
                exponent: h.exponent,
                envelope: env,
                value: h.amplitude * phase * env,
            }
        })
        .collect();
    let total = constant + ell0_term + oscillating.iter().map(|h| h.value).sum::<Complex64>();
    Ok(CorrelatorSeries {
        x,
        t,
        constant,
        ell0_term,
        oscillating,
        total,
    })
}

/// The density-density correlator series at (x, T).
pub fn density_correlator(
    gs: &GroundState,
    x: f64,
    t: f64,
    ell_max: i64,
    fd_step: f64,
) -> Result<CorrelatorSeries> {
    check_point(x, t)?;
    check_gate(gs, t)?;
    let harmonics = harmonic_amplitudes_with(gs, ell_max, fd_step, &SmoothOptions::default())?;
    assemble_correlator(gs, &harmonics, x, t)
}

/// -(1/8π²) ∂²_x∂²_α of the ℓ = 0 sector Ã₀(α) e^{φ(α, x)}, φ = 2iαk_Fx + 2α²𝒵² ln(envelope
/// base). The x-derivatives are taken analytically, ∂²_x e^φ = (φ_xx + φ_x²)e^φ, and the
/// α-derivative by the same finite-difference scheme as the harmonics, with Ã₀ evaluated
/// from the determinants at every α ≠ 0. The step is capped at 0.02/(k_Fx) so that the
/// stencil resolves the phase e^{2iαk_Fx}.
pub fn ell0_sector_by_differences(
    gs: &GroundState,
    x: f64,
    t: f64,
    step: f64,
) -> Result<SecondDerivative> {
    check_point(x, t)?;
    let step = step.min(0.02 / (gs.kf * x));
    let a = PI * t / gs.v0;
    let ax = a * x;
    let g = log_envelope_base(gs.v0, x, t);
    let g1 = -a / ax.tanh();
    let g2 = a * a / ax.sinh().powi(2);
    let zz = gs.zq * gs.zq;
    let i = Complex64::new(0.0, 1.0);
    let opts = SmoothOptions::default();
    let f = |al: f64| -> Result<Complex64> {
        let amp = amplitude_or_identity(gs, Complex64::new(al, 0.0), 0, &opts)?;
        let phi = 2.0 * i * al * gs.kf * x + 2.0 * al * al * zz * g;
        let phi_x = 2.0 * i * al * gs.kf + 2.0 * al * al * zz * g1;
        let phi_xx = Complex64::new(2.0 * al * al * zz * g2, 0.0);
        Ok(-(amp * (phi_xx + phi_x * phi_x) * phi.exp()) / (8.0 * PI * PI))
    };
    second_derivative_at_zero(f, Complex64::new(0.0, 0.0), step)
}
