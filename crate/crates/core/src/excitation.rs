//! Excited-sector bookkeeping, the nonlinear equation for u, the auxiliary function z
//! and decay rates.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groundstate::GroundState;
use crate::model::{kernel, kernel_d1, theta, ModelParams};
use crate::numerics::SampledFunction;
use crate::thermal::{log_fermi_continuous, Branch, ThermalSolution};

fn i() -> Complex64 {
    Complex64::i()
}

/// Integer data (ℓ, p±, h±) labelling one term of the asymptotic series.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExcitationClass {
    pub ell: i64,
    pub p_plus: Vec<i64>,
    pub h_plus: Vec<i64>,
    pub p_minus: Vec<i64>,
    pub h_minus: Vec<i64>,
}

fn strictly_increasing_positive(v: &[i64], name: &str) -> Result<()> {
    if v.iter().any(|&x| x < 1) {
        return Err(Error::InvalidInput(format!(
            "{name}: quantum numbers must be positive"
        )));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(format!(
            "{name}: quantum numbers must be strictly increasing"
        )));
    }
    Ok(())
}

/// Removes every k ≤ 0 of `a` together with 1 - k of `b`.
fn cancel_pairs(a: &mut Vec<i64>, b: &mut Vec<i64>) -> Result<()> {
    for k in a.iter().copied().filter(|&k| k <= 0).collect::<Vec<_>>() {
        let pos = b.iter().position(|&x| x == 1 - k).ok_or_else(|| {
            Error::InvalidInput(format!(
                "quantum number {k} has no partner to cancel against"
            ))
        })?;
        b.remove(pos);
    }
    a.retain(|&k| k > 0);
    Ok(())
}

impl ExcitationClass {
    pub fn new(
        ell: i64,
        p_plus: Vec<i64>,
        h_plus: Vec<i64>,
        p_minus: Vec<i64>,
        h_minus: Vec<i64>,
    ) -> Result<Self> {
        strictly_increasing_positive(&p_plus, "p+")?;
        strictly_increasing_positive(&h_plus, "h+")?;
        strictly_increasing_positive(&p_minus, "p-")?;
        strictly_increasing_positive(&h_minus, "h-")?;
        let (npp, nhp, npm, nhm) = (
            p_plus.len() as i64,
            h_plus.len() as i64,
            p_minus.len() as i64,
            h_minus.len() as i64,
        );
        if npp + npm != nhp + nhm {
            return Err(Error::InvalidInput(
                "numbers of particles and holes must agree".into(),
            ));
        }
        if npp - nhp != ell || nhm - npm != ell {
            return Err(Error::InvalidInput(format!(
                "class is inconsistent with ell = {ell}: need n+p - n+h = n-h - n-p = ell"
            )));
        }
        Ok(Self {
            ell,
            p_plus,
            h_plus,
            p_minus,
            h_minus,
        })
    }

    /// The class without particles or holes.
    pub fn empty() -> Self {
        Self {
            ell: 0,
            p_plus: vec![],
            h_plus: vec![],
            p_minus: vec![],
            h_minus: vec![],
        }
    }

    /// Lowest class of a sector: ℓ particles at +q and ℓ holes at -q (or mirrored for ℓ < 0).
    pub fn lowest(ell: i64) -> Self {
        let seq = |k: i64| (1..=k).collect::<Vec<_>>();
        if ell >= 0 {
            Self::new(ell, seq(ell), vec![], vec![], seq(ell)).expect("valid by construction")
        } else {
            Self::new(ell, vec![], seq(-ell), seq(-ell), vec![]).expect("valid by construction")
        }
    }

    /// n = n⁺_p + n⁻_p.
    pub fn n(&self) -> i64 {
        (self.p_plus.len() + self.p_minus.len()) as i64
    }

    /// Σp⁺ + Σp⁻ + Σh⁺ + Σh⁻.
    pub fn quantum_sum(&self) -> i64 {
        self.p_plus.iter().sum::<i64>()
            + self.p_minus.iter().sum::<i64>()
            + self.h_plus.iter().sum::<i64>()
            + self.h_minus.iter().sum::<i64>()
    }

    /// The same configuration labelled by ℓ + m, to be paired with α - m: m root pairs with
    /// quantum numbers 1-|m|, …, 0 are added (p⁺, h⁻ for m > 0; h⁺, p⁻ for m < 0) and the
    /// quantum numbers shifted, +m on p⁺, h⁻ and -m on p⁻, h⁺. A particle and a hole at the same
    /// Fermi point with numbers k ≤ 0 and 1 - k sit at the same rapidity and cancel.
    pub fn relabelled(&self, m: i64) -> Result<Self> {
        let shift = |v: &[i64], s: i64| v.iter().map(|x| x + s).collect::<Vec<_>>();
        let extra: Vec<i64> = (1..=m.abs()).collect();
        let with_extra = |v: Vec<i64>, add: bool| -> Vec<i64> {
            if add {
                extra.iter().copied().chain(v).collect()
            } else {
                v
            }
        };
        let mut pp = with_extra(shift(&self.p_plus, m), m > 0);
        let mut hp = with_extra(shift(&self.h_plus, -m), m < 0);
        let mut pm = with_extra(shift(&self.p_minus, -m), m < 0);
        let mut hm = with_extra(shift(&self.h_minus, m), m > 0);
        cancel_pairs(&mut pp, &mut hp)?;
        cancel_pairs(&mut hp, &mut pp)?;
        cancel_pairs(&mut pm, &mut hm)?;
        cancel_pairs(&mut hm, &mut pm)?;
        for v in [&mut pp, &mut hp, &mut pm, &mut hm] {
            v.sort_unstable();
        }
        Self::new(self.ell + m, pp, hp, pm, hm)
    }

    /// Mirror image p⁺ ↔ p⁻, h⁺ ↔ h⁻, ℓ → -ℓ.
    pub fn mirrored(&self) -> Self {
        Self {
            ell: -self.ell,
            p_plus: self.p_minus.clone(),
            h_plus: self.h_minus.clone(),
            p_minus: self.p_plus.clone(),
            h_minus: self.h_plus.clone(),
        }
    }
}

/// Leading Taylor coefficients of the roots and u₁ at the Fermi points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootOffsets {
    pub eta_plus: Vec<Complex64>,
    pub eta_minus: Vec<Complex64>,
    pub xi_plus: Vec<Complex64>,
    pub xi_minus: Vec<Complex64>,
    pub u1_at_q: Complex64,
}

/// α_ℓ = α + ℓ.
pub fn alpha_ell(alpha: Complex64, ell: i64) -> Complex64 {
    alpha + ell as f64
}

/// u₁(q) = 2πi(ℓ - α_ℓ 𝒵).
pub fn u1_at_q(gs: &GroundState, alpha: Complex64, ell: i64) -> Complex64 {
    2.0 * PI * i() * (ell as f64 - alpha_ell(alpha, ell) * gs.zq)
}

/// u₁(λ) = -2πi α_ℓ Z(λ) + 2πi ℓ on the ground-state grid.
pub fn u1_function(gs: &GroundState, alpha: Complex64, ell: i64) -> SampledFunction {
    let a = alpha_ell(alpha, ell);
    gs.z.map(|_, z| -2.0 * PI * i() * a * z + 2.0 * PI * i() * ell as f64)
}

pub fn u1_at(gs: &GroundState, alpha: Complex64, ell: i64, x: Complex64) -> Complex64 {
    let a = alpha_ell(alpha, ell);
    -2.0 * PI * i() * a * gs.z_at(x) + 2.0 * PI * i() * ell as f64
}

/// Integer shift of α that brings Im u₁ back into (-π, π).
pub fn constraint_shift(u1: Complex64) -> i64 {
    // Im u₁ = 2π(ℓ - Re α_ℓ 𝒵); shifting α by -k and ℓ by +k adds 2πk.
    -(u1.im / (2.0 * PI)).round() as i64
}

fn offsets_unchecked(gs: &GroundState, class: &ExcitationClass, u1: Complex64) -> RootOffsets {
    let e = gs.eps0_prime_q;
    let f = |k: i64| 2.0 * PI * (k as f64 - 0.5);
    RootOffsets {
        eta_plus: class
            .p_plus
            .iter()
            .map(|&p| (f(p) + i() * u1) / e)
            .collect(),
        eta_minus: class
            .p_minus
            .iter()
            .map(|&p| (f(p) - i() * u1) / e)
            .collect(),
        xi_plus: class
            .h_plus
            .iter()
            .map(|&h| (f(h) - i() * u1) / e)
            .collect(),
        xi_minus: class
            .h_minus
            .iter()
            .map(|&h| (f(h) + i() * u1) / e)
            .collect(),
        u1_at_q: u1,
    }
}

impl RootOffsets {
    fn check_half_planes(&self) -> Result<()> {
        let all = self
            .eta_plus
            .iter()
            .chain(&self.eta_minus)
            .chain(&self.xi_plus)
            .chain(&self.xi_minus);
        for v in all {
            if !(v.re > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "root offset {v} lies in the wrong half plane"
                )));
            }
        }
        Ok(())
    }
}

/// Root offsets with the half-plane and (-π, π) constraint checks.
pub fn root_offsets(
    gs: &GroundState,
    class: &ExcitationClass,
    alpha: Complex64,
) -> Result<RootOffsets> {
    let u1 = u1_at_q(gs, alpha, class.ell);
    if !(u1.im > -PI && u1.im < PI) {
        return Err(Error::Constraint {
            im_u1: u1.im,
            suggested_shift: -constraint_shift(u1),
        });
    }
    let o = offsets_unchecked(gs, class, u1);
    o.check_half_planes()?;
    Ok(o)
}

/// Root offsets without the (-π, π) constraint; half-plane conditions still apply.
pub fn root_offsets_unconstrained(
    gs: &GroundState,
    class: &ExcitationClass,
    alpha: Complex64,
) -> Result<RootOffsets> {
    let o = offsets_unchecked(gs, class, u1_at_q(gs, alpha, class.ell));
    o.check_half_planes()?;
    Ok(o)
}

fn u2_coefficients(gs: &GroundState, o: &RootOffsets) -> (Complex64, Complex64) {
    let tail = (PI * PI / 3.0 + o.u1_at_q * o.u1_at_q) / (2.0 * gs.eps0_prime_q);
    let sum = |v: &[Complex64]| v.iter().sum::<Complex64>();
    let right = 2.0 * PI * (sum(&o.eta_plus) + sum(&o.xi_plus)) - tail;
    let left = 2.0 * PI * (sum(&o.eta_minus) + sum(&o.xi_minus)) - tail;
    (right, left)
}

/// u₂(λ) = R(λ,q)[2π(Ση⁺+Σξ⁺) - (π²/3+u₁²)/2ε₀′] + R(λ,-q)[...] on the ground-state grid.
pub fn u2_function(gs: &GroundState, offsets: &RootOffsets) -> SampledFunction {
    let (a, b) = u2_coefficients(gs, offsets);
    let values = gs
        .resolvent_plus
        .values()
        .iter()
        .zip(gs.resolvent_minus.values())
        .map(|(rp, rm)| a * rp + b * rm)
        .collect();
    SampledFunction::new(gs.grid.clone(), values).expect("ground-state grid")
}

pub fn u2_at(gs: &GroundState, offsets: &RootOffsets, x: Complex64) -> Complex64 {
    let (a, b) = u2_coefficients(gs, offsets);
    a * gs.resolvent_at(x, true) + b * gs.resolvent_at(x, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootKind {
    Particle,
    Hole,
}

/// One root ŝ placed at leading order near a Fermi point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlacedRoot {
    pub kind: RootKind,
    pub branch: Branch,
    pub quantum: i64,
    /// η for particles, ξ for holes.
    pub offset: Complex64,
    pub position: Complex64,
}

/// All roots used in a real-axis solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacedRoots {
    pub roots: Vec<PlacedRoot>,
}

impl PlacedRoots {
    pub fn particles(&self) -> impl Iterator<Item = &PlacedRoot> {
        self.roots.iter().filter(|r| r.kind == RootKind::Particle)
    }

    pub fn holes(&self) -> impl Iterator<Item = &PlacedRoot> {
        self.roots.iter().filter(|r| r.kind == RootKind::Hole)
    }

    /// Positions ŝ⁺ of the particles.
    pub fn plus(&self) -> Vec<Complex64> {
        self.particles().map(|r| r.position).collect()
    }

    /// Positions ŝ⁻ of the holes.
    pub fn minus(&self) -> Vec<Complex64> {
        self.holes().map(|r| r.position).collect()
    }

    /// iT Σ θ(λ - ŝ⁺) - iT Σ θ(λ - ŝ⁻).
    pub fn source(&self, c: f64, t: f64, x: Complex64) -> Complex64 {
        let s: Complex64 = self
            .particles()
            .map(|r| theta(c, x - r.position))
            .sum::<Complex64>()
            - self
                .holes()
                .map(|r| theta(c, x - r.position))
                .sum::<Complex64>();
        i() * t * s
    }

    pub fn source_d1(&self, c: f64, t: f64, x: Complex64) -> Complex64 {
        let s: Complex64 = self
            .particles()
            .map(|r| kernel(c, x - r.position))
            .sum::<Complex64>()
            - self
                .holes()
                .map(|r| kernel(c, x - r.position))
                .sum::<Complex64>();
        i() * t * s
    }

    pub fn source_d2(&self, c: f64, t: f64, x: Complex64) -> Complex64 {
        let s: Complex64 = self
            .particles()
            .map(|r| kernel_d1(c, x - r.position))
            .sum::<Complex64>()
            - self
                .holes()
                .map(|r| kernel_d1(c, x - r.position))
                .sum::<Complex64>();
        i() * t * s
    }
}

/// Leading-order placement ŝ⁺ = ±q + iTη, ŝ⁻ = ±q - iTξ for every quantum number of
/// `class`, plus the extra roots with non-positive quantum numbers that the real-axis
/// contour must carry when Im u₁ lies outside (-π, π).
pub fn place_roots(
    gs: &GroundState,
    class: &ExcitationClass,
    alpha: Complex64,
    t: f64,
) -> Result<(PlacedRoots, i64)> {
    let u1 = u1_at_q(gs, alpha, class.ell);
    let m = constraint_shift(u1);
    let mut p_plus = class.p_plus.clone();
    let mut h_plus = class.h_plus.clone();
    let mut p_minus = class.p_minus.clone();
    let mut h_minus = class.h_minus.clone();
    let extra: Vec<i64> = (1 - m.abs()..=0).collect();
    if m > 0 {
        p_plus.extend(&extra);
        h_minus.extend(&extra);
    } else if m < 0 {
        h_plus.extend(&extra);
        p_minus.extend(&extra);
    }
    let aug = ExcitationClass {
        ell: class.ell + m,
        p_plus,
        h_plus,
        p_minus,
        h_minus,
    };
    let o = offsets_unchecked(gs, &aug, u1);
    o.check_half_planes()?;
    let q = gs.q;
    let mut roots = Vec::new();
    let mut push = |kind, branch, quantum: &[i64], offs: &[Complex64]| {
        for (&k, &off) in quantum.iter().zip(offs) {
            let base = if branch == Branch::Right { q } else { -q };
            let dir = if kind == RootKind::Particle {
                i()
            } else {
                -i()
            };
            roots.push(PlacedRoot {
                kind,
                branch,
                quantum: k,
                offset: off,
                position: base + dir * t * off,
            });
        }
    };
    push(RootKind::Particle, Branch::Right, &aug.p_plus, &o.eta_plus);
    push(RootKind::Particle, Branch::Left, &aug.p_minus, &o.eta_minus);
    push(RootKind::Hole, Branch::Right, &aug.h_plus, &o.xi_plus);
    push(RootKind::Hole, Branch::Left, &aug.h_minus, &o.xi_minus);
    let limit = 0.25 * gs.q.min(gs.c);
    if let Some(r) = roots.iter().find(|r| (t * r.offset).norm() >= limit) {
        return Err(Error::InvalidInput(format!(
            "root offset T|eta| = {} exceeds min(q, c)/4 = {limit}; lower the temperature",
            (t * r.offset).norm()
        )));
    }
    Ok((PlacedRoots { roots }, m))
}

/// Iteration settings for the excited-state equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitedConfig {
    pub damping: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Refuse temperatures above this fraction of h.
    pub temperature_gate: f64,
    /// One Newton step per root on the solved u, followed by a re-solve.
    pub newton_polish: bool,
}

impl Default for ExcitedConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iterations: 500,
            tolerance: 1e-12,
            temperature_gate: 0.05,
            newton_polish: false,
        }
    }
}

/// Solution u of the excited-state equation on the thermal grid.
#[derive(Debug, Clone)]
pub struct ExcitedSolution {
    pub alpha: Complex64,
    pub class: ExcitationClass,
    pub thermal: Arc<ThermalSolution>,
    pub u: SampledFunction,
    /// Continuous-branch log(1 + e^{-u/T}) on the grid.
    pub log_weight: Vec<Complex64>,
    pub roots: PlacedRoots,
    /// Number of extra root pairs carried because of the (-π, π) constraint.
    pub winding_shift: i64,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves u = λ² - h_α - (T/2π)∫K log(1+e^{-u/T}) + iTΣ[θ(λ-ŝ⁺) - θ(λ-ŝ⁻)].
pub fn solve_u_with(
    thermal: Arc<ThermalSolution>,
    class: &ExcitationClass,
    alpha: Complex64,
    cfg: ExcitedConfig,
) -> Result<ExcitedSolution> {
    let gs = thermal.ground.clone();
    let t = thermal.t();
    let gate = cfg.temperature_gate * gs.h;
    if t > gate {
        return Err(Error::TemperatureGate { t, gate });
    }
    let (roots, m) = place_roots(&gs, class, alpha, t)?;
    let a_ell = alpha_ell(alpha, class.ell);
    let init: Vec<Complex64> = thermal
        .grid
        .nodes()
        .iter()
        .zip(thermal.eps.values())
        .map(|(&l, &e)| {
            e + t * (-2.0 * PI * i() * a_ell * gs.z_at(l) + 2.0 * PI * i() * class.ell as f64)
        })
        .collect();
    let sol = iterate(thermal, class, alpha, roots, m, init, &cfg)?;
    if cfg.newton_polish {
        let polished = sol.polished_roots();
        let init = sol.u.values().to_vec();
        return iterate(sol.thermal, class, alpha, polished, m, init, &cfg);
    }
    Ok(sol)
}

fn iterate(
    thermal: Arc<ThermalSolution>,
    class: &ExcitationClass,
    alpha: Complex64,
    roots: PlacedRoots,
    m: i64,
    mut u: Vec<Complex64>,
    cfg: &ExcitedConfig,
) -> Result<ExcitedSolution> {
    let gs = thermal.ground.clone();
    let (c, t) = (gs.c, thermal.t());
    let grid = thermal.grid.clone();
    let x = grid.nodes().to_vec();
    let n = x.len();
    let h_alpha = gs.h + 2.0 * PI * i() * alpha * t;
    let drive: Vec<Complex64> = x
        .iter()
        .map(|&l| l * l - h_alpha + roots.source(c, t, l))
        .collect();
    let kmat = thermal.kernel_matrix();
    let scale = gs.h.max(t);
    let gamma = cfg.damping;
    let mut history = Vec::new();
    for it in 1..=cfg.max_iterations {
        let logs = log_fermi_continuous(&u, t)?;
        let mut res = 0.0f64;
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let row = &kmat[k * n..(k + 1) * n];
            let s: Complex64 = row.iter().zip(&logs).map(|(a, b)| b * *a).sum();
            let rhs = drive[k] - t * s;
            res = res.max((rhs - u[k]).norm());
            next[k] = (1.0 - gamma) * u[k] + gamma * rhs;
        }
        history.push(res);
        u = next;
        if res <= cfg.tolerance * scale {
            let log_weight = log_fermi_continuous(&u, t)?;
            let sol = ExcitedSolution {
                alpha,
                class: class.clone(),
                thermal: thermal.clone(),
                u: SampledFunction::new(grid.clone(), u)?,
                log_weight,
                roots,
                winding_shift: m,
                iterations: it,
                residual: 0.0,
            };
            let residual = sol.equation_residual();
            return Ok(ExcitedSolution { residual, ..sol });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

/// Builds ground state and Yang–Yang state from `params`, then solves for u.
pub fn solve_u(params: &ModelParams, class: &ExcitationClass) -> Result<ExcitedSolution> {
    let thermal = Arc::new(ThermalSolution::solve(params)?);
    solve_u_with(thermal, class, params.alpha, ExcitedConfig::default())
}

impl ExcitedSolution {
    pub fn t(&self) -> f64 {
        self.thermal.t()
    }

    pub fn ground(&self) -> &GroundState {
        &self.thermal.ground
    }

    fn h_alpha(&self) -> Complex64 {
        self.ground().h + 2.0 * PI * i() * self.alpha * self.t()
    }

    fn integral_term<K: Fn(Complex64) -> Complex64>(&self, k: K) -> Complex64 {
        let g = &self.thermal.grid;
        g.nodes()
            .iter()
            .zip(g.weights())
            .zip(&self.log_weight)
            .map(|((&mu, &w), &l)| k(mu) * w * l)
            .sum::<Complex64>()
            * (self.t() / (2.0 * PI))
    }

    /// u(λ) continued off the grid.
    pub fn u_at(&self, x: Complex64) -> Complex64 {
        let (c, t) = (self.ground().c, self.t());
        x * x - self.h_alpha() - self.integral_term(|mu| kernel(c, x - mu))
            + self.roots.source(c, t, x)
    }

    pub fn u_d1_at(&self, x: Complex64) -> Complex64 {
        let (c, t) = (self.ground().c, self.t());
        2.0 * x - self.integral_term(|mu| kernel_d1(c, x - mu)) + self.roots.source_d1(c, t, x)
    }

    pub fn u_d2_at(&self, x: Complex64) -> Complex64 {
        let (c, t) = (self.ground().c, self.t());
        Complex64::new(2.0, 0.0) - self.integral_term(|mu| crate::model::kernel_d2(c, x - mu))
            + self.roots.source_d2(c, t, x)
    }

    /// sup |u - RHS(u)| on the grid.
    pub fn equation_residual(&self) -> f64 {
        self.u
            .nodes()
            .iter()
            .zip(self.u.values())
            .map(|(&x, &v)| (self.u_at(x) - v).norm())
            .fold(0.0, f64::max)
    }

    /// Offsets of the class itself (without the extra constraint roots).
    pub fn class_offsets(&self) -> Result<RootOffsets> {
        root_offsets_unconstrained(self.ground(), &self.class, self.alpha)
    }

    /// |1 + e^{-u(ŝ)/T}| for every placed root.
    pub fn root_residuals(&self) -> Vec<(PlacedRoot, f64, Complex64)> {
        let t = self.t();
        self.roots
            .roots
            .iter()
            .map(|r| {
                let v = (1.0 + (-self.u_at(r.position) / t).exp()).norm();
                (*r, v, self.u_d1_at(r.position))
            })
            .collect()
    }

    /// One Newton step per root towards 1 + e^{-u/T} = 0 using the solved u.
    pub fn polished_roots(&self) -> PlacedRoots {
        let t = self.t();
        let roots = self
            .roots
            .roots
            .iter()
            .map(|r| {
                let u = self.u_at(r.position);
                let k = ((u.im / (PI * t) - 1.0) / 2.0).round();
                let target = i() * PI * t * (2.0 * k + 1.0);
                let d = self.u_d1_at(r.position);
                PlacedRoot {
                    position: r.position - (u - target) / d,
                    ..*r
                }
            })
            .collect();
        PlacedRoots { roots }
    }
}

impl PlacedRoot {
    /// Quantum number after absorbing `shift` extra root pairs into ℓ.
    pub fn canonical_quantum(&self, shift: i64) -> i64 {
        match (self.kind, self.branch) {
            (RootKind::Particle, Branch::Right) | (RootKind::Hole, Branch::Left) => {
                self.quantum + shift
            }
            (RootKind::Particle, Branch::Left) | (RootKind::Hole, Branch::Right) => {
                self.quantum - shift
            }
        }
    }
}

impl ExcitedSolution {
    /// The same real-axis data labelled by (ℓ + m, α - m) and shifted quantum numbers,
    /// a class for which Im u₁ lies in (-π, π).
    pub fn canonical(&self) -> Result<(ExcitationClass, Complex64)> {
        let m = self.winding_shift;
        let pick = |kind, branch| {
            let mut v: Vec<i64> = self
                .roots
                .roots
                .iter()
                .filter(|r| r.kind == kind && r.branch == branch)
                .map(|r| r.canonical_quantum(m))
                .collect();
            v.sort_unstable();
            v
        };
        let class = ExcitationClass::new(
            self.class.ell + m,
            pick(RootKind::Particle, Branch::Right),
            pick(RootKind::Hole, Branch::Right),
            pick(RootKind::Particle, Branch::Left),
            pick(RootKind::Hole, Branch::Left),
        )?;
        Ok((class, self.alpha - m as f64))
    }
}

/// z = -(1/2πi) log[(1 + e^{-u/T}) / (1 + e^{-ε/T})] on the continuous branch.
pub fn z_function(thermal: &ThermalSolution, u: &SampledFunction) -> Result<SampledFunction> {
    if !Arc::ptr_eq(thermal.eps.grid(), u.grid()) && thermal.grid.nodes() != u.nodes() {
        return Err(Error::InvalidInput("u and eps must share a grid".into()));
    }
    let t = thermal.t();
    let lu = log_fermi_continuous(u.values(), t)?;
    let values = lu
        .iter()
        .zip(&thermal.log_weight)
        .map(|(a, &b)| -(a - b) / (2.0 * PI * i()))
        .collect();
    SampledFunction::new(u.grid().clone(), values)
}

/// z together with z′ and z″ from the analytic derivatives of u and ε.
pub fn z_with_derivatives(
    sol: &ExcitedSolution,
) -> Result<(SampledFunction, SampledFunction, SampledFunction)> {
    let th = &sol.thermal;
    let t = th.t();
    let z = z_function(th, &sol.u)?;
    let mut d1 = Vec::with_capacity(z.len());
    let mut d2 = Vec::with_capacity(z.len());
    let pref = -1.0 / (2.0 * PI * i());
    for (k, &x) in z.nodes().iter().enumerate() {
        let u = sol.u.values()[k];
        let e = th.eps.values()[k];
        let (u1, u2) = (sol.u_d1_at(x), sol.u_d2_at(x));
        let (e1, e2) = (th.eps_d1_at(x), th.eps_d2_at(x));
        let wu = crate::thermal::fermi_weight(u, t);
        let we = crate::thermal::fermi_weight(e, t);
        d1.push(pref * (-(u1 / t) * wu + (e1 / t) * we));
        d2.push(
            pref * (-(u2 / t) * wu + (u1 / t) * (u1 / t) * wu * (1.0 - wu) + (e2 / t) * we
                - (e1 / t) * (e1 / t) * we * (1.0 - we)),
        );
    }
    let g = z.grid().clone();
    Ok((
        z,
        SampledFunction::new(g.clone(), d1)?,
        SampledFunction::new(g, d2)?,
    ))
}

/// p[u] = i∫z - iΣ(ŝ⁺ - ŝ⁻).
pub fn decay_rate_numeric(sol: &ExcitedSolution) -> Result<Complex64> {
    let z = z_function(&sol.thermal, &sol.u)?;
    let roots: Complex64 =
        sol.roots.plus().iter().sum::<Complex64>() - sol.roots.minus().iter().sum::<Complex64>();
    Ok(i() * z.integral() - i() * roots)
}

/// p = -2iα_ℓ k_F + (2πT/v₀)[(α_ℓ𝒵)² - ℓ² - n + Σp + Σh].
pub fn decay_rate_closed(
    gs: &GroundState,
    class: &ExcitationClass,
    alpha: Complex64,
    t: f64,
) -> Complex64 {
    let a = alpha_ell(alpha, class.ell);
    let az = a * gs.zq;
    let ints = (-(class.ell * class.ell) - class.n() + class.quantum_sum()) as f64;
    -2.0 * i() * a * gs.kf + 2.0 * PI * t / gs.v0 * (az * az + ints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal::ThermalConfig;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gs(cc: f64, h: f64) -> Arc<GroundState> {
        Arc::new(GroundState::build(&ModelParams::ground(cc, h).unwrap()).unwrap())
    }

    fn benchmark() -> ExcitationClass {
        ExcitationClass::new(1, vec![1], vec![], vec![], vec![1]).unwrap()
    }

    #[test]
    fn class_bookkeeping() {
        assert!(ExcitationClass::new(1, vec![1], vec![], vec![], vec![]).is_err());
        assert!(ExcitationClass::new(0, vec![0], vec![], vec![], vec![1]).is_err());
        assert!(ExcitationClass::new(0, vec![2, 1], vec![1, 3], vec![], vec![]).is_err());
        let k = ExcitationClass::new(0, vec![1, 2], vec![1, 3], vec![], vec![]).unwrap();
        assert_eq!(k.n(), 2);
        assert_eq!(k.quantum_sum(), 7);
        assert_eq!(
            ExcitationClass::lowest(-2).mirrored(),
            ExcitationClass::lowest(2)
        );
    }

    #[test]
    fn u1_limits() {
        let g = gs(1.0, 1.0);
        assert!(u1_function(&g, c(0.0, 0.0), 0)
            .values()
            .iter()
            .all(|v| v.norm() == 0.0));
        let f = gs(1e6, 1.0);
        for v in u1_function(&f, c(0.0, 0.0), 2).values() {
            assert!(v.norm() < 1e-4 * 2.0 * PI * 2.0);
        }
        let u = u1_at_q(&g, c(0.2, 0.0), 1);
        assert!((u - 2.0 * PI * i() * (1.0 - 1.2 * g.zq)).norm() < 1e-14);
        // Continuation at q matches 𝒵.
        assert!((u1_at(&g, c(0.2, 0.0), 1, c(g.q, 0.0)) - u).norm() < 1e-12);
    }

    #[test]
    fn offsets_examples() {
        let g = gs(1.0, 1.0);
        let k = ExcitationClass::new(0, vec![1, 3], vec![2], vec![], vec![1]).unwrap_err();
        let _ = k;
        let k = ExcitationClass::new(0, vec![1, 3], vec![2, 5], vec![], vec![]).unwrap();
        let o = root_offsets(&g, &k, c(0.0, 0.0)).unwrap();
        assert!((o.eta_plus[0] - c(PI / g.eps0_prime_q, 0.0)).norm() < 1e-14);
        let f = gs(1e6, 1.0);
        let k = ExcitationClass::new(0, vec![1], vec![1], vec![], vec![]).unwrap();
        let o = root_offsets(&f, &k, c(0.3, 0.0)).unwrap();
        assert!((o.eta_plus[0] * f.eps0_prime_q - (PI + 2.0 * PI * 0.3)).norm() < 1e-3);
        match root_offsets(&f, &ExcitationClass::empty(), c(0.9, 0.0)) {
            Err(Error::Constraint {
                suggested_shift, ..
            }) => assert_eq!(suggested_shift, -1),
            other => panic!("expected constraint error, got {other:?}"),
        }
    }

    #[test]
    fn u2_reduces_to_eps2() {
        let g = gs(1.0, 1.0);
        let o = root_offsets(&g, &ExcitationClass::empty(), c(0.0, 0.0)).unwrap();
        let u2 = u2_function(&g, &o);
        let e2 = crate::thermal::eps2_predicted(&g);
        for (a, b) in u2.values().iter().zip(e2.values()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn u2_even_for_mirror_symmetric_class() {
        let g = gs(1.0, 1.0);
        let k = ExcitationClass::new(0, vec![1], vec![2], vec![1], vec![2]).unwrap();
        assert_eq!(k.mirrored(), k);
        let o = root_offsets(&g, &k, c(0.0, 0.0)).unwrap();
        let v = u2_function(&g, &o).into_values();
        let n = v.len();
        for j in 0..n {
            assert!((v[j] - v[n - 1 - j]).norm() < 1e-10);
        }
    }

    #[test]
    fn empty_class_reproduces_yang_yang() {
        let g = gs(1.0, 1.0);
        let th = Arc::new(ThermalSolution::solve_with(g, 0.02, ThermalConfig::default()).unwrap());
        let sol = solve_u_with(
            th.clone(),
            &ExcitationClass::empty(),
            c(0.0, 0.0),
            ExcitedConfig::default(),
        )
        .unwrap();
        for (a, b) in sol.u.values().iter().zip(th.eps.values()) {
            assert!((a - b).norm() < 1e-12);
        }
        let z = z_function(&th, &sol.u).unwrap();
        let zmax = z.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(zmax < 1e-10, "{zmax}");
        assert!(decay_rate_numeric(&sol).unwrap().norm() < 1e-10);
    }

    #[test]
    fn closed_decay_rate_properties() {
        let g = gs(1e6, 1.0);
        let t = 0.01;
        assert_eq!(
            decay_rate_closed(&g, &ExcitationClass::empty(), c(0.0, 0.0), t),
            c(0.0, 0.0)
        );
        let p = decay_rate_closed(&g, &benchmark(), c(0.0, 0.0), t);
        assert!((p.re - 2.0 * PI * t / g.v0 * g.zq * g.zq).abs() < 1e-14);
        assert!((p.re - 2.0 * PI * t / 2.0).abs() < 1e-5);
        let up = ExcitationClass::new(1, vec![2], vec![], vec![], vec![1]).unwrap();
        let q = decay_rate_closed(&g, &up, c(0.0, 0.0), t);
        assert!((q.re - p.re - 2.0 * PI * t / g.v0).abs() < 1e-14);
        let g1 = gs(1.0, 1.0);
        let r = decay_rate_closed(&g1, &ExcitationClass::empty(), c(0.2, 0.0), t);
        assert!(r.re > 0.0);
    }

    #[test]
    fn benchmark_class_expansion() {
        let g = gs(1.0, 1.0);
        let class = benchmark();
        let o = root_offsets_unconstrained(&g, &class, c(0.0, 0.0)).unwrap();
        let mut rems = Vec::new();
        let ts = [0.02, 0.01, 0.005];
        for &t in &ts {
            let th = Arc::new(
                ThermalSolution::solve_with(g.clone(), t, ThermalConfig::default()).unwrap(),
            );
            let sol = solve_u_with(th, &class, c(0.0, 0.0), ExcitedConfig::default()).unwrap();
            assert_eq!(sol.winding_shift, 1);
            let mut worst = 0.0f64;
            for (x, v) in sol.u.nodes().iter().zip(sol.u.values()) {
                if x.re.abs() <= 0.9 * g.q {
                    let pred = g.eps0_at(*x)
                        + t * u1_at(&g, c(0.0, 0.0), 1, *x)
                        + t * t * u2_at(&g, &o, *x);
                    worst = worst.max((v - pred).norm());
                }
            }
            rems.push(worst);
        }
        let e = crate::numerics::fit::log_log_slope(&ts, &rems).unwrap();
        assert!(e >= 2.7, "{rems:?} {e}");
    }

    fn benchmark_solution(t: f64, polish: bool) -> ExcitedSolution {
        let g = gs(1.0, 1.0);
        let th = Arc::new(ThermalSolution::solve_with(g, t, ThermalConfig::default()).unwrap());
        let cfg = ExcitedConfig {
            newton_polish: polish,
            ..Default::default()
        };
        solve_u_with(th, &benchmark(), c(0.0, 0.0), cfg).unwrap()
    }

    #[test]
    fn root_condition_residuals() {
        let t = 0.005;
        let bound =
            |s: &ExcitedSolution, d: Complex64| 0.1 * d.norm() * t / s.ground().eps0_prime_q;
        let lead = benchmark_solution(t, false);
        let (r, v, _) = lead.root_residuals()[0];
        assert_eq!(
            (r.kind, r.branch, r.quantum),
            (RootKind::Particle, Branch::Right, 1)
        );
        // Leading-order placement leaves an O(T) residual.
        let coarse = benchmark_solution(2.0 * t, false).root_residuals()[0].1;
        assert!((coarse / v - 2.0).abs() < 0.1, "{coarse} {v}");
        let pol = benchmark_solution(t, true);
        let (_, v, d) = pol.root_residuals()[0];
        assert!(v <= bound(&pol, d), "{v} > {}", bound(&pol, d));
    }

    #[test]
    fn z_limits() {
        let t = 0.005;
        let sol = benchmark_solution(t, false);
        let g = sol.ground();
        let z = z_function(&sol.thermal, &sol.u).unwrap();
        let at0 = z.interpolate(0.0).unwrap();
        // Each extra root pair carried on the real axis adds one unit inside the sea.
        let lim = -g.z_at(c(0.0, 0.0)) + 1.0 + sol.winding_shift as f64;
        assert!((at0 - lim).norm() < 10.0 * t, "{at0} vs {lim}");
        for (x, v) in z.nodes().iter().zip(z.values()) {
            if x.re.abs() > g.q + 0.3 {
                let e0 = g.eps0_at(*x).re;
                assert!(v.norm() <= (-e0 / t).exp() / PI, "{x} {v}");
            }
        }
        let (_, d1, _) = z_with_derivatives(&sol).unwrap();
        let fd = z.derivative().unwrap();
        for k in (0..z.len()).step_by(7) {
            assert!(
                (d1.values()[k] - fd.values()[k]).norm() < 1e-6 * (1.0 + fd.values()[k].norm())
            );
        }
    }

    #[test]
    fn decay_rate_cross_route() {
        let g = gs(1.0, 1.0);
        let ts = [0.02, 0.01, 0.005];
        let d: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let s = benchmark_solution(t, false);
                (decay_rate_numeric(&s).unwrap()
                    - decay_rate_closed(&g, &benchmark(), c(0.0, 0.0), t))
                .norm()
            })
            .collect();
        let e = crate::numerics::fit::log_log_slope(&ts, &d).unwrap();
        assert!(e >= 1.7, "{d:?}");
    }

    #[test]
    fn canonical_relabelling() {
        let sol = benchmark_solution(0.01, false);
        let (k, a) = sol.canonical().unwrap();
        assert_eq!(
            k,
            ExcitationClass::new(2, vec![1, 2], vec![], vec![], vec![1, 2]).unwrap()
        );
        assert_eq!(a, c(-1.0, 0.0));
        assert_eq!(benchmark().relabelled(1).unwrap(), k);
        assert_eq!(k.relabelled(-1).unwrap(), benchmark());
        let g = sol.ground();
        // Same roots from the canonical class, which satisfies the constraint.
        let o = root_offsets(g, &k, a).unwrap();
        let mut from_canon: Vec<f64> = o.eta_plus.iter().chain(&o.xi_minus).map(|v| v.re).collect();
        let mut placed: Vec<f64> = sol.roots.roots.iter().map(|r| r.offset.re).collect();
        from_canon.sort_by(f64::total_cmp);
        placed.sort_by(f64::total_cmp);
        for (x, y) in from_canon.iter().zip(&placed) {
            assert!((x - y).abs() < 1e-12);
        }
        let t = 0.01;
        let p0 = decay_rate_closed(g, &benchmark(), c(0.0, 0.0), t);
        assert!((decay_rate_closed(g, &k, a, t) - p0).norm() < 1e-12);
    }
}
