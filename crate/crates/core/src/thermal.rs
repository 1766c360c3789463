//! Finite-temperature Yang–Yang state, Fermi-weight poles and low-temperature checks.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groundstate::GroundState;
use crate::model::{kernel, kernel_d1, kernel_d2, ModelParams};
use crate::numerics::fit::{fit_quadratic_even, log_log_slope};
use crate::numerics::quad::{integrate_real, QuadOptions};
use crate::numerics::{Grid, SampledFunction};

/// Discretisation and iteration settings for real-line solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalConfig {
    pub damping: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Gauss–Legendre nodes per panel.
    pub panel_nodes: usize,
    /// Width of the panels touching ±q, in units of T/ε₀′(q).
    pub fermi_panel: f64,
    /// Geometric growth of panel widths away from ±q.
    pub growth: f64,
    /// Cutoff Λ is placed where ε₀(Λ) reaches this many T.
    pub cutoff_energy: f64,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iterations: 500,
            tolerance: 1e-12,
            panel_nodes: 16,
            fermi_panel: 2.0,
            growth: 2.0,
            cutoff_energy: 40.0,
        }
    }
}

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// ln(1 + w) accurate for small |w|.
pub fn ln_1p(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        w * (1.0 - w * (0.5 - w * (1.0 / 3.0 - 0.25 * w)))
    } else {
        (1.0 + w).ln()
    }
}

/// log(1 + e^{-x/T}) on the overflow-free branch: log1p(e^{-x/T}) for Re x > 0,
/// -x/T + log1p(e^{x/T}) otherwise.
pub fn log_fermi(x: Complex64, t: f64) -> Complex64 {
    let y = x / t;
    if y.re > 0.0 {
        ln_1p((-y).exp())
    } else {
        -y + ln_1p(y.exp())
    }
}

/// Real version of [`log_fermi`].
pub fn log_fermi_real(x: f64, t: f64) -> f64 {
    let y = x / t;
    if y > 0.0 {
        (-y).exp().ln_1p()
    } else {
        -y + y.exp().ln_1p()
    }
}

/// Fermi weight ϑ = 1 / (1 + e^{x/T}).
pub fn fermi_weight(x: Complex64, t: f64) -> Complex64 {
    let y = x / t;
    if y.re > 0.0 {
        let e = (-y).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + y.exp())
    }
}

/// Evaluates log(1 + e^{-u/T}) along an ordered real grid on the branch that is
/// continuous along the grid and vanishes at both ends.
pub fn log_fermi_continuous(u: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    const MAX_JUMP: f64 = 0.75 * PI;
    let raw: Vec<Complex64> = u.iter().map(|&x| log_fermi(x, t)).collect();
    let n = raw.len();
    if n == 0 {
        return Ok(raw);
    }
    let tau = 2.0 * PI;
    let unwrap = |order: &mut dyn Iterator<Item = usize>| -> Result<Vec<Complex64>> {
        let mut out = raw.clone();
        let mut prev: Option<f64> = None;
        for i in order {
            let target = prev.unwrap_or(0.0);
            let k = ((target - raw[i].im) / tau).round();
            out[i] = raw[i] + Complex64::new(0.0, tau * k);
            if let Some(p) = prev {
                if (out[i].im - p).abs() > MAX_JUMP {
                    return Err(Error::Branch(format!(
                        "phase jump of {:.3} between adjacent nodes; refine the grid",
                        (out[i].im - p).abs()
                    )));
                }
            }
            prev = Some(out[i].im);
        }
        Ok(out)
    };
    let left = unwrap(&mut (0..n))?;
    let right = unwrap(&mut (0..n).rev())?;
    for (a, b) in left.iter().zip(&right) {
        if (a - b).norm() > 1e-6 {
            return Err(Error::Branch(
                "windings seeded at the two grid ends disagree".into(),
            ));
        }
    }
    Ok(left)
}

/// Composite real-line grid, graded geometrically towards ±q, truncated at ±Λ.
pub fn real_line_grid(gs: &GroundState, t: f64, cfg: &ThermalConfig) -> Result<(Arc<Grid>, f64)> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput("real-line grid needs T > 0".into()));
    }
    let q = gs.q;
    let s = t / gs.eps0_prime_q;
    let target = cfg.cutoff_energy * t;
    let mut lambda = q + target / gs.eps0_prime_q;
    for _ in 0..200 {
        if gs.eps0_at(Complex64::new(lambda, 0.0)).re >= target {
            break;
        }
        lambda = q + 1.2 * (lambda - q);
    }
    let lambda = lambda + 4.0 * s;
    let hmax = 0.5 * gs.c.min(q).min(1.0);
    let w0 = (cfg.fermi_panel * s).min(hmax);

    let mut right = vec![0.0, q];
    let grow = |w: f64, k: usize| {
        if k == 0 {
            w0
        } else {
            (w * cfg.growth).min(hmax)
        }
    };
    let (mut x, mut w) = (q, w0);
    for k in 0.. {
        w = grow(w, k);
        if x - w <= 0.5 * w {
            break;
        }
        x -= w;
        right.push(x);
    }
    let (mut x, mut w) = (q, w0);
    for k in 0.. {
        w = grow(w, k);
        if x + 1.5 * w >= lambda {
            break;
        }
        x += w;
        right.push(x);
    }
    right.push(lambda);
    right.sort_by(f64::total_cmp);
    right.dedup();
    let mut breaks: Vec<f64> = right
        .iter()
        .rev()
        .map(|x| -x)
        .filter(|x| *x < 0.0)
        .collect();
    breaks.extend(right);
    Ok((Arc::new(Grid::composite(&breaks, cfg.panel_nodes)?), lambda))
}

/// (1/2π) w_j K(λ_i - λ_j) as a dense row-major matrix.
pub fn kernel_matrix(grid: &Grid, c: f64) -> Vec<f64> {
    let x = grid.real_nodes();
    let w: Vec<f64> = grid.weights().iter().map(|z| z.re).collect();
    let n = x.len();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = x[i] - x[j];
            m[i * n + j] = w[j] * 2.0 * c / (d * d + c * c) / (2.0 * PI);
        }
    }
    m
}

/// Solution of the Yang–Yang equation on a truncated real grid.
#[derive(Debug, Clone)]
pub struct ThermalSolution {
    pub params: ModelParams,
    pub ground: Arc<GroundState>,
    pub grid: Arc<Grid>,
    pub eps: SampledFunction,
    /// log(1 + e^{-ε/T}) on the grid.
    pub log_weight: Vec<f64>,
    pub cutoff: f64,
    pub iterations: usize,
    pub residual: f64,
    pub config: ThermalConfig,
    kernel: Arc<Vec<f64>>,
}

impl ThermalSolution {
    /// Builds the ground state and solves at the temperature in `params`.
    pub fn solve(params: &ModelParams) -> Result<Self> {
        let gs = Arc::new(GroundState::build(params)?);
        Self::solve_with(gs, params.t, ThermalConfig::default())
    }

    /// Damped fixed-point iteration ε ← (1-γ)ε + γ RHS(ε) from ε = λ² - h.
    pub fn solve_with(gs: Arc<GroundState>, t: f64, cfg: ThermalConfig) -> Result<Self> {
        let params = ModelParams::new(gs.c, gs.h, t, c0())?;
        if !(t > 0.0) {
            return Err(Error::InvalidInput("Yang-Yang solve needs T > 0".into()));
        }
        let (grid, cutoff) = real_line_grid(&gs, t, &cfg)?;
        let kernel = Arc::new(kernel_matrix(&grid, gs.c));
        let x = grid.real_nodes();
        let n = x.len();
        let drive: Vec<f64> = x.iter().map(|v| v * v - gs.h).collect();
        let mut eps = drive.clone();
        let mut logs = vec![0.0; n];
        let scale = gs.h.max(t);
        let mut history = Vec::new();
        let gamma = cfg.damping;
        for it in 1..=cfg.max_iterations {
            for (l, e) in logs.iter_mut().zip(&eps) {
                *l = log_fermi_real(*e, t);
            }
            let mut res = 0.0f64;
            for i in 0..n {
                let row = &kernel[i * n..(i + 1) * n];
                let s: f64 = row.iter().zip(&logs).map(|(a, b)| a * b).sum();
                let rhs = drive[i] - t * s;
                res = res.max((rhs - eps[i]).abs());
                eps[i] = (1.0 - gamma) * eps[i] + gamma * rhs;
            }
            history.push(res);
            if res <= cfg.tolerance * scale {
                for (l, e) in logs.iter_mut().zip(&eps) {
                    *l = log_fermi_real(*e, t);
                }
                let sol = Self {
                    params,
                    ground: gs.clone(),
                    grid: grid.clone(),
                    eps: SampledFunction::new(
                        grid.clone(),
                        eps.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
                    )?,
                    log_weight: logs,
                    cutoff,
                    iterations: it,
                    residual: 0.0,
                    config: cfg,
                    kernel,
                };
                let residual = sol.equation_residual();
                return Ok(Self { residual, ..sol });
            }
        }
        let residual = *history.last().unwrap_or(&f64::NAN);
        Err(Error::NoConvergence {
            iterations: cfg.max_iterations,
            residual,
            history,
        })
    }

    pub fn t(&self) -> f64 {
        self.params.t
    }

    /// Row-major (1/2π) w_j K(λ_i - λ_j).
    pub fn kernel_matrix(&self) -> &[f64] {
        &self.kernel
    }

    /// sup_i |ε_i - RHS(ε)_i|.
    pub fn equation_residual(&self) -> f64 {
        let n = self.grid.len();
        let x = self.grid.real_nodes();
        let t = self.t();
        let logs: Vec<f64> = self
            .eps
            .values()
            .iter()
            .map(|e| log_fermi_real(e.re, t))
            .collect();
        (0..n)
            .map(|i| {
                let row = &self.kernel[i * n..(i + 1) * n];
                let s: f64 = row.iter().zip(&logs).map(|(a, b)| a * b).sum();
                (x[i] * x[i] - self.params.h - t * s - self.eps.values()[i].re).abs()
            })
            .fold(0.0, f64::max)
    }

    fn integral_term<K: Fn(Complex64) -> Complex64>(&self, k: K) -> Complex64 {
        self.grid
            .nodes()
            .iter()
            .zip(self.grid.weights())
            .zip(&self.log_weight)
            .map(|((&mu, &w), &l)| k(mu) * w * l)
            .sum::<Complex64>()
            * (self.t() / (2.0 * PI))
    }

    /// ε(λ) continued off the grid.
    pub fn eps_at(&self, x: Complex64) -> Complex64 {
        let c = self.params.c;
        x * x - self.params.h - self.integral_term(|mu| kernel(c, x - mu))
    }

    pub fn eps_d1_at(&self, x: Complex64) -> Complex64 {
        let c = self.params.c;
        2.0 * x - self.integral_term(|mu| kernel_d1(c, x - mu))
    }

    pub fn eps_d2_at(&self, x: Complex64) -> Complex64 {
        let c = self.params.c;
        Complex64::new(2.0, 0.0) - self.integral_term(|mu| kernel_d2(c, x - mu))
    }

    /// Fermi weight on the grid.
    pub fn fermi_weight(&self) -> SampledFunction {
        let t = self.t();
        self.eps.map(|_, e| fermi_weight(e, t))
    }

    /// Indices of grid nodes with |λ| ≤ bound.
    pub fn interior_indices(&self, bound: f64) -> Vec<usize> {
        self.grid
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, x)| x.re.abs() <= bound)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Convenience wrapper: ground state plus Yang–Yang solve.
pub fn solve_yang_yang(params: &ModelParams) -> Result<ThermalSolution> {
    ThermalSolution::solve(params)
}

/// ε₂(λ) = -(π²/6ε₀′)(R(λ,q) + R(λ,-q)) on the ground-state grid.
pub fn eps2_predicted(gs: &GroundState) -> SampledFunction {
    let f = -PI * PI / (6.0 * gs.eps0_prime_q);
    let values = gs
        .resolvent_plus
        .values()
        .iter()
        .zip(gs.resolvent_minus.values())
        .map(|(a, b)| f * (a + b))
        .collect();
    SampledFunction::new(gs.grid.clone(), values).expect("ground-state grid")
}

/// ε₂ off the grid.
pub fn eps2_at(gs: &GroundState, x: Complex64) -> Complex64 {
    -PI * PI / (6.0 * gs.eps0_prime_q) * (gs.resolvent_at(x, true) + gs.resolvent_at(x, false))
}

/// The first-order correction ε₁ vanishes identically.
pub fn eps1_predicted(gs: &GroundState) -> SampledFunction {
    gs.z.map(|_, _| c0())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Right,
    Left,
}

/// Leading-order zeros r = ±q + (2πiT/ε₀′)(k + ½) of 1 + e^{-ε/T}.
#[derive(Debug, Clone, Serialize)]
pub struct FermiPoles {
    pub branch: Branch,
    pub ks: Vec<i64>,
    pub roots: Vec<Complex64>,
}

impl FermiPoles {
    pub fn leading_order(gs: &GroundState, t: f64, branch: Branch, ks: Vec<i64>) -> Self {
        let base = match branch {
            Branch::Right => gs.q,
            Branch::Left => -gs.q,
        };
        let roots = ks
            .iter()
            .map(|&k| {
                Complex64::new(base, 0.0)
                    + Complex64::new(0.0, 2.0 * PI * t / gs.eps0_prime_q) * (k as f64 + 0.5)
            })
            .collect();
        Self { branch, ks, roots }
    }

    /// |1 + exp(-ε(r)/T)| with ε linearised at the Fermi point.
    pub fn linearised_residuals(&self, thermal: &ThermalSolution) -> Vec<f64> {
        let t = thermal.t();
        let base = Complex64::new(
            match self.branch {
                Branch::Right => thermal.ground.q,
                Branch::Left => -thermal.ground.q,
            },
            0.0,
        );
        let e = thermal.eps_at(base);
        let d = thermal.eps_d1_at(base);
        self.roots
            .iter()
            .map(|&r| (1.0 + (-(e + d * (r - base)) / t).exp()).norm())
            .collect()
    }
}

/// Result of a low-temperature expansion check.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionFit {
    pub temperatures: Vec<f64>,
    pub remainders: Vec<f64>,
    pub exponent: f64,
}

impl ExpansionFit {
    pub fn new(temperatures: Vec<f64>, remainders: Vec<f64>) -> Self {
        let exponent = log_log_slope(&temperatures, &remainders).unwrap_or(f64::NAN);
        Self {
            temperatures,
            remainders,
            exponent,
        }
    }
}

/// Yang–Yang low-temperature law: remainder of ε - ε₀ - T²ε₂ on [-0.9q, 0.9q] and the
/// fitted T² coefficient of ε(0) - ε₀(0).
#[derive(Debug, Clone, Serialize)]
pub struct YangYangLowT {
    pub fit: ExpansionFit,
    pub t2_coefficient_fitted: f64,
    pub t2_coefficient_predicted: f64,
}

pub fn verify_yang_yang_low_t(
    gs: Arc<GroundState>,
    temperatures: &[f64],
    cfg: ThermalConfig,
) -> Result<YangYangLowT> {
    let mut rem = Vec::new();
    let mut at0 = Vec::new();
    let zero = c0();
    for &t in temperatures {
        let th = ThermalSolution::solve_with(gs.clone(), t, cfg)?;
        let mut worst = 0.0f64;
        for i in th.interior_indices(0.9 * gs.q) {
            let x = th.grid.nodes()[i];
            let r = th.eps.values()[i] - gs.eps0_at(x) - t * t * eps2_at(&gs, x);
            worst = worst.max(r.norm());
        }
        rem.push(worst);
        at0.push(((th.eps_at(zero) - gs.eps0_at(zero)) / (t * t)).re);
    }
    // (ε(0) - ε₀(0))/T² ≈ a + b T.
    let (a, _) = fit_linear(temperatures, &at0).unwrap_or((f64::NAN, f64::NAN));
    Ok(YangYangLowT {
        fit: ExpansionFit::new(temperatures.to_vec(), rem),
        t2_coefficient_fitted: a,
        t2_coefficient_predicted: eps2_at(&gs, zero).re,
    })
}

/// Least-squares line y ≈ a + b x.
pub fn fit_linear(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let s: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
    // a + b x = a + b (√x)², so the even quadratic fitter applies.
    fit_quadratic_even(&s, y)
}

/// Model for the Sommerfeld-type integral J = T ∫ f(λ) log(1 + e^{-ε(λ)/T}) dλ
/// with ε = ε₀ + T ε₁.
pub struct SommerfeldModel<'a> {
    pub q: f64,
    pub f: &'a dyn Fn(f64) -> f64,
    pub eps0: &'a dyn Fn(f64) -> f64,
    pub eps1: &'a dyn Fn(f64) -> f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SommerfeldReport {
    pub fit: ExpansionFit,
    pub direct: Vec<f64>,
    pub predicted: Vec<f64>,
    /// (J + ∫_{-q}^{q} f ε) / T² per temperature.
    pub t2_measured: Vec<f64>,
    /// Predicted T² coefficient at ε₁ = 0.
    pub t2_predicted: f64,
}

fn slope_at(g: &dyn Fn(f64) -> f64, x: f64, scale: f64) -> f64 {
    let d = 1e-4 * scale;
    (8.0 * (g(x + d) - g(x - d)) - (g(x + 2.0 * d) - g(x - 2.0 * d))) / (12.0 * d)
}

/// Direct quadrature of J against its expansion through O(T²).
pub fn verify_sommerfeld(
    model: &SommerfeldModel,
    temperatures: &[f64],
) -> Result<SommerfeldReport> {
    let q = model.q;
    if !(q > 0.0) {
        return Err(Error::InvalidInput("Fermi point must be positive".into()));
    }
    let sr = slope_at(model.eps0, q, q);
    let sl = -slope_at(model.eps0, -q, q);
    if !(sr > 0.0 && sl > 0.0) {
        return Err(Error::InvalidInput(
            "eps0 model must cross zero with positive slope at ±q".into(),
        ));
    }
    let opts = QuadOptions {
        abs_tol: 1e-17,
        rel_tol: 1e-14,
        max_intervals: 20_000,
    };
    let (f, e0, e1) = (model.f, model.eps0, model.eps1);
    let mut direct = Vec::new();
    let mut predicted = Vec::new();
    let mut t2 = Vec::new();
    let mut remainders = Vec::new();
    for &t in temperatures {
        let eps = |x: f64| e0(x) + t * e1(x);
        let mut hi = q + 1.0 * t / sr;
        while eps(hi) < 60.0 * t {
            hi = q + 1.5 * (hi - q);
        }
        let mut lo = -q - t / sl;
        while eps(lo) < 60.0 * t {
            lo = -q + 1.5 * (lo + q);
        }
        let w = 8.0 * t / sr.min(sl);
        let mut bps = vec![lo, -q - w, -q, -q + w, q - w, q, q + w, hi];
        bps.retain(|x| *x >= lo && *x <= hi);
        bps.sort_by(f64::total_cmp);
        bps.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let j = integrate_real(|x| t * f(x) * log_fermi_real(eps(x), t), &bps, opts)?;
        let inner = integrate_real(|x| f(x) * eps(x), &[-q, -q + w, 0.0, q - w, q], opts)?;
        let pred = -inner
            + t * t * PI * PI / 6.0 * (f(q) / sr + f(-q) / sl)
            + t * t * 0.5 * (f(q) * e1(q).powi(2) / sr + f(-q) * e1(-q).powi(2) / sl);
        direct.push(j);
        predicted.push(pred);
        t2.push((j + inner) / (t * t));
        remainders.push((j - pred).abs());
    }
    let t2_predicted = PI * PI / 6.0 * (f(q) / sr + f(-q) / sl);
    Ok(SommerfeldReport {
        fit: ExpansionFit::new(temperatures.to_vec(), remainders),
        direct,
        predicted,
        t2_measured: t2,
        t2_predicted,
    })
}
