//! Zero-temperature ground state: Fermi boundary, dressed energy, dressed charge, resolvent.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{kernel, kernel_d1, kernel_d2, ModelParams};
use crate::numerics::{nystrom_extend, Grid, NystromOperator, SampledFunction};

/// Discretisation settings for the ground-state solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateConfig {
    pub nodes: usize,
    pub q_tolerance: f64,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        Self {
            nodes: 96,
            q_tolerance: 1e-12,
        }
    }
}

/// Solved T = 0 state on [-q, q] with its derived scalars.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub c: f64,
    pub h: f64,
    pub q: f64,
    pub grid: Arc<Grid>,
    /// Dressed energy ε₀.
    pub eps0: SampledFunction,
    /// ε₀′ from the differentiated equation.
    pub eps0_derivative: SampledFunction,
    /// ε₀′(q).
    pub eps0_prime_q: f64,
    /// Total density of states ρ_t.
    pub rho_t: SampledFunction,
    /// Dressed charge Z = 2π ρ_t.
    pub z: SampledFunction,
    /// 𝒵 = Z(q).
    pub zq: f64,
    /// Particle density D.
    pub density: f64,
    pub kf: f64,
    pub v0: f64,
    /// R(λ, q).
    pub resolvent_plus: SampledFunction,
    /// R(λ, -q).
    pub resolvent_minus: SampledFunction,
    pub config: GroundStateConfig,
}

fn lieb(c: f64) -> impl Fn(Complex64, Complex64) -> Complex64 {
    move |a, b| kernel(c, a - b)
}

fn operator(c: f64, q: f64, nodes: usize) -> Result<NystromOperator> {
    let grid = Arc::new(Grid::gauss_legendre(nodes, -q, q)?);
    NystromOperator::new(grid, lieb(c), 1.0)
}

fn eps0_boundary_value(c: f64, h: f64, q: f64, nodes: usize) -> Result<f64> {
    let op = operator(c, q, nodes)?;
    let rhs: Vec<Complex64> = op.grid().nodes().iter().map(|x| x * x - h).collect();
    let eps = op.solve(&rhs)?;
    let qc = Complex64::new(q, 0.0);
    Ok(nystrom_extend(lieb(c), 1.0, &eps, qc * qc - h, qc).re)
}

/// Fermi boundary q with ε₀(q) = 0, by bracketing and Illinois-type secant steps.
pub fn solve_fermi_boundary(params: &ModelParams, tol: f64) -> Result<f64> {
    solve_fermi_boundary_with(params, tol, GroundStateConfig::default().nodes)
}

pub fn solve_fermi_boundary_with(params: &ModelParams, tol: f64, nodes: usize) -> Result<f64> {
    params.validate()?;
    let (c, h) = (params.c, params.h);
    let f = |q: f64| eps0_boundary_value(c, h, q, nodes).map(|v| v / h);
    let lo = h.sqrt() / 10.0;
    let hi = 10.0 * h.sqrt();
    let mut a = lo;
    let mut fa = f(a)?;
    let mut b = f64::NAN;
    let mut fb = f64::NAN;
    let steps = 24;
    for k in 1..=steps {
        let x = lo * (hi / lo).powf(k as f64 / steps as f64);
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() != fa.signum() {
            b = x;
            fb = fx;
            break;
        }
        a = x;
        fa = fx;
    }
    if b.is_nan() {
        return Err(Error::NoBracket { lo, hi });
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let x = (a * fb - b * fa) / (fb - fa);
        let fx = f(x)?;
        if fx.abs() <= tol || (b - a).abs() <= 1e-15 * b.abs() {
            return Ok(x);
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NoConvergence {
        iterations: 200,
        residual: fa.abs().min(fb.abs()),
        history: vec![],
    })
}

/// R(·, ξ) on the grid of `op`.
fn resolvent_on(op: &NystromOperator, c: f64, xi: f64) -> Result<SampledFunction> {
    let rhs: Vec<Complex64> = op
        .grid()
        .nodes()
        .iter()
        .map(|&x| kernel(c, x - xi) / (2.0 * PI))
        .collect();
    op.solve(&rhs)
}

/// Resolvent R(λ, ξ) on a fresh Gauss–Legendre grid over [-q, q].
pub fn resolvent(params: &ModelParams, q: f64, xi: f64) -> Result<SampledFunction> {
    params.validate()?;
    let op = operator(params.c, q, GroundStateConfig::default().nodes)?;
    resolvent_on(&op, params.c, xi)
}

impl GroundState {
    /// Builds the ground state with default discretisation.
    pub fn build(params: &ModelParams) -> Result<Self> {
        Self::build_with(params, GroundStateConfig::default())
    }

    pub fn build_with(params: &ModelParams, config: GroundStateConfig) -> Result<Self> {
        params.validate()?;
        let (c, h) = (params.c, params.h);
        let q = solve_fermi_boundary_with(params, config.q_tolerance, config.nodes)?;
        let op = operator(c, q, config.nodes)?;
        let grid = op.grid().clone();
        let nodes = grid.nodes().to_vec();

        let eps0 = op.solve(&nodes.iter().map(|x| x * x - h).collect::<Vec<_>>())?;
        let eps0_derivative = op.solve(&nodes.iter().map(|x| 2.0 * x).collect::<Vec<_>>())?;
        let z = op.solve(&vec![Complex64::new(1.0, 0.0); nodes.len()])?;
        let rho_t = z.map(|_, v| v / (2.0 * PI));
        let resolvent_plus = resolvent_on(&op, c, q)?;
        let resolvent_minus = resolvent_on(&op, c, -q)?;

        let qc = Complex64::new(q, 0.0);
        let zq = nystrom_extend(lieb(c), 1.0, &z, Complex64::new(1.0, 0.0), qc).re;
        let eps0_prime_q = nystrom_extend(lieb(c), 1.0, &eps0_derivative, 2.0 * qc, qc).re;
        let density = rho_t.integral().re;
        let kf = PI * density;
        let v0 = eps0_prime_q / zq;

        let gs = Self {
            c,
            h,
            q,
            grid,
            eps0,
            eps0_derivative,
            eps0_prime_q,
            rho_t,
            z,
            zq,
            density,
            kf,
            v0,
            resolvent_plus,
            resolvent_minus,
            config,
        };
        gs.check_invariants()?;
        Ok(gs)
    }

    fn check_invariants(&self) -> Result<()> {
        let qc = Complex64::new(self.q, 0.0);
        let edge = self.eps0_at(qc).norm().max(self.eps0_at(-qc).norm());
        if edge > 1e-10 * self.h {
            return Err(Error::Numerical(format!(
                "boundary condition violated: |eps0(q)| = {edge:e}"
            )));
        }
        let asym = |f: &SampledFunction| {
            let v = f.values();
            let n = v.len();
            (0..n)
                .map(|i| (v[i] - v[n - 1 - i]).norm())
                .fold(0.0, f64::max)
        };
        let a = asym(&self.eps0).max(asym(&self.z));
        if a > 1e-10 * (1.0 + self.h) {
            return Err(Error::Numerical(format!("parity violated by {a:e}")));
        }
        if !(self.zq >= 1.0 - 1e-12 && self.eps0_prime_q > 0.0 && self.v0 > 0.0) {
            return Err(Error::Numerical(format!(
                "unphysical ground state: Zq = {}, eps0'(q) = {}, v0 = {}",
                self.zq, self.eps0_prime_q, self.v0
            )));
        }
        Ok(())
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            c: self.c,
            h: self.h,
            t: 0.0,
            alpha: Complex64::new(0.0, 0.0),
        }
    }

    fn extend_with<K: Fn(Complex64, Complex64) -> Complex64>(
        &self,
        k: K,
        f: &SampledFunction,
        rhs: Complex64,
        x: Complex64,
    ) -> Complex64 {
        nystrom_extend(k, 1.0, f, rhs, x)
    }

    /// ε₀(λ) anywhere in the strip of analyticity.
    pub fn eps0_at(&self, x: Complex64) -> Complex64 {
        self.extend_with(lieb(self.c), &self.eps0, x * x - self.h, x)
    }

    /// ε₀′(λ).
    pub fn eps0_d1_at(&self, x: Complex64) -> Complex64 {
        self.extend_with(lieb(self.c), &self.eps0_derivative, 2.0 * x, x)
    }

    /// ε₀″(λ) = 2 + (1/2π) ∫ K′(λ-μ) ε₀′(μ) dμ.
    pub fn eps0_d2_at(&self, x: Complex64) -> Complex64 {
        let c = self.c;
        self.extend_with(
            move |a, b| kernel_d1(c, a - b),
            &self.eps0_derivative,
            Complex64::new(2.0, 0.0),
            x,
        )
    }

    /// Z(λ).
    pub fn z_at(&self, x: Complex64) -> Complex64 {
        self.extend_with(lieb(self.c), &self.z, Complex64::new(1.0, 0.0), x)
    }

    /// Z′(λ).
    pub fn z_d1_at(&self, x: Complex64) -> Complex64 {
        let c = self.c;
        self.extend_with(
            move |a, b| kernel_d1(c, a - b),
            &self.z,
            Complex64::new(0.0, 0.0),
            x,
        )
    }

    /// Z″(λ).
    pub fn z_d2_at(&self, x: Complex64) -> Complex64 {
        let c = self.c;
        self.extend_with(
            move |a, b| kernel_d2(c, a - b),
            &self.z,
            Complex64::new(0.0, 0.0),
            x,
        )
    }

    /// Z′ sampled on the ground-state grid.
    pub fn z_derivative(&self) -> SampledFunction {
        self.z.map(|x, _| self.z_d1_at(x))
    }

    /// Z″ sampled on the ground-state grid.
    pub fn z_second_derivative(&self) -> SampledFunction {
        self.z.map(|x, _| self.z_d2_at(x))
    }

    /// R(λ, ±q) with `plus` selecting ξ = q.
    pub fn resolvent_at(&self, x: Complex64, plus: bool) -> Complex64 {
        let xi = if plus { self.q } else { -self.q };
        let f = if plus {
            &self.resolvent_plus
        } else {
            &self.resolvent_minus
        };
        self.extend_with(lieb(self.c), f, kernel(self.c, x - xi) / (2.0 * PI), x)
    }

    /// 𝒵 by the resolvent route, 1 + ∫ R(λ, q) dλ.
    pub fn zq_from_resolvent(&self) -> f64 {
        1.0 + self.resolvent_plus.integral().re
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gs(c: f64, h: f64) -> GroundState {
        GroundState::build(&ModelParams::ground(c, h).unwrap()).unwrap()
    }

    #[test]
    fn free_fermion_limit() {
        let g = gs(1e6, 1.0);
        assert!((g.q - 1.0).abs() < 1e-4);
        assert!((g.zq - 1.0).abs() < 1e-4);
        assert!((g.density - 1.0 / PI).abs() < 1e-4);
        assert!((g.kf - 1.0).abs() < 1e-4);
        assert!((g.v0 - 2.0).abs() < 2e-4);
        let r = &g.resolvent_plus;
        for (x, v) in r.nodes().iter().zip(r.values()) {
            let k = kernel(1e6, x - g.q) / (2.0 * PI);
            assert!((v - k).norm() < 1e-5);
        }
    }

    #[test]
    fn interactions_push_the_fermi_point_out() {
        let g = gs(1.0, 1.0);
        assert!(g.q > 1.0);
        let e = g.eps0_at(Complex64::new(g.q, 0.0));
        assert!(e.norm() <= 1e-10);
    }

    #[test]
    fn grid_refinement_oracle() {
        let p = ModelParams::ground(1.0, 1.0).unwrap();
        let a = GroundState::build(&p).unwrap();
        let b = GroundState::build_with(
            &p,
            GroundStateConfig {
                nodes: 384,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((a.q - b.q).abs() < 1e-8);
        assert!((a.zq - b.zq).abs() < 1e-9);
        assert!((a.v0 - b.v0).abs() < 1e-8);
        let c = GroundState::build_with(
            &p,
            GroundStateConfig {
                nodes: 192,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((a.zq - c.zq).abs() <= 1e-9);
    }

    #[test]
    fn resolvent_routes_agree() {
        let g = gs(1.0, 1.0);
        assert!((g.zq_from_resolvent() - g.zq).abs() < 1e-9);
        let standalone = resolvent(&g.params(), g.q, g.q).unwrap();
        assert!((standalone.integral().re - (g.zq - 1.0)).abs() < 1e-9);
        // R(λ, -q) = R(-λ, q)
        let n = g.resolvent_plus.len();
        for i in 0..n {
            let d = g.resolvent_minus.values()[i] - g.resolvent_plus.values()[n - 1 - i];
            assert!(d.norm() < 1e-10);
        }
    }

    #[test]
    fn derivative_route_matches_finite_differences() {
        let g = gs(1.0, 1.0);
        let step = 1e-4 * g.q;
        for &x in &[-0.8, -0.3, 0.1, 0.55, 0.9] {
            let x = x * g.q;
            let fd = (g.eps0_at(Complex64::new(x + step, 0.0))
                - g.eps0_at(Complex64::new(x - step, 0.0)))
                / (2.0 * step);
            let d = g.eps0_d1_at(Complex64::new(x, 0.0));
            assert!((fd - d).norm() <= 1e-6 * d.norm().max(1e-3));
            let fdz = (g.z_at(Complex64::new(x + step, 0.0))
                - g.z_at(Complex64::new(x - step, 0.0)))
                / (2.0 * step);
            assert!((fdz - g.z_d1_at(Complex64::new(x, 0.0))).norm() < 1e-7);
            let fdz2 = (g.z_d1_at(Complex64::new(x + step, 0.0))
                - g.z_d1_at(Complex64::new(x - step, 0.0)))
                / (2.0 * step);
            assert!((fdz2 - g.z_d2_at(Complex64::new(x, 0.0))).norm() < 1e-7);
        }
        assert!((g.v0 * g.zq - g.eps0_prime_q).abs() < 1e-14);
    }

    #[test]
    fn tiny_chemical_potential() {
        let g = solve_fermi_boundary(&ModelParams::ground(1.0, 1e-6).unwrap(), 1e-12).unwrap();
        assert!(g <= 1e-2 && g > 0.0);
    }

    #[test]
    fn negative_chemical_potential_is_rejected() {
        let e = GroundState::build(&ModelParams {
            c: 1.0,
            h: -1.0,
            t: 0.0,
            alpha: Complex64::new(0.0, 0.0),
        })
        .unwrap_err();
        assert!(e.is_input_error());
    }
}
