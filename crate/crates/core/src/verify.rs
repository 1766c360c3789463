//! Registry of the end-to-end verification checks with pass/fail reporting.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::amplitude::{
    amplitude_tilde_unconstrained, bd_finite_t, discrete_amplitude, discrete_weight,
    smooth_amplitude, smooth_amplitude_with, verify_cauchy_edge, verify_double_integral, w_closed,
    w_series, SmoothOptions,
};
use crate::correlator::{
    assemble_correlator, ell0_closed_form, ell0_sector_by_differences, generating_asymptotics_with,
    harmonic_amplitudes_with, DEFAULT_FD_STEP,
};
use crate::error::Result;
use crate::excitation::{
    alpha_ell, decay_rate_closed, decay_rate_numeric, root_offsets_unconstrained, solve_u_with,
    u1_at, u2_at, ExcitationClass, ExcitedConfig, ExcitedSolution,
};
use crate::groundstate::{GroundState, GroundStateConfig};
use crate::model::ModelParams;
use crate::numerics::fit::log_log_slope;
use crate::specfun::verify_gamma_integral_identity;
use crate::thermal::{verify_yang_yang_low_t, ThermalConfig, ThermalSolution};

/// How a measured value is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// value ≤ threshold; a tolerance, affected by the override.
    AtMost,
    /// value ≥ threshold; a fitted exponent, never overridden.
    AtLeast,
    /// value ≠ 0 means the property holds.
    Holds,
}

#[derive(Debug, Clone, Serialize)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Measurement {
    fn judge(label: impl Into<String>, value: f64, threshold: f64, comparison: Comparison) -> Self {
        let passed = match comparison {
            Comparison::AtMost => value <= threshold,
            Comparison::AtLeast => value >= threshold,
            Comparison::Holds => value != 0.0,
        };
        Self {
            label: label.into(),
            value,
            threshold,
            comparison,
            passed,
        }
    }
}

/// Settings shared by all checks.
#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Replaces every tolerance-type threshold.
    pub tolerance_override: Option<f64>,
    /// Ground-state nodes; the default discretisation when `None`.
    pub grid_nodes: Option<usize>,
    /// Contour nodes for the smooth amplitude.
    pub contour_nodes: Option<usize>,
}

impl VerifyOptions {
    fn at_most(&self, label: impl Into<String>, value: f64, tolerance: f64) -> Measurement {
        Measurement::judge(
            label,
            value,
            self.tolerance_override.unwrap_or(tolerance),
            Comparison::AtMost,
        )
    }

    fn at_least(&self, label: impl Into<String>, value: f64, bound: f64) -> Measurement {
        Measurement::judge(label, value, bound, Comparison::AtLeast)
    }

    fn holds(&self, label: impl Into<String>, ok: bool) -> Measurement {
        Measurement::judge(label, if ok { 1.0 } else { 0.0 }, 1.0, Comparison::Holds)
    }

    fn ground_config(&self) -> GroundStateConfig {
        let mut cfg = GroundStateConfig::default();
        if let Some(n) = self.grid_nodes {
            cfg.nodes = n;
        }
        cfg
    }

    fn smooth(&self) -> SmoothOptions {
        let mut o = SmoothOptions::default();
        if let Some(n) = self.contour_nodes {
            o.nodes = n;
        }
        o
    }

    fn ground(&self, c: f64, h: f64) -> Result<Arc<GroundState>> {
        Ok(Arc::new(GroundState::build_with(
            &ModelParams::ground(c, h)?,
            self.ground_config(),
        )?))
    }
}

/// One entry of the registry.
#[derive(Debug, Clone, Copy)]
pub struct Check {
    pub name: &'static str,
    pub title: &'static str,
    run: fn(&VerifyOptions) -> Result<Vec<Measurement>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub title: String,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    /// Error message when the check could not be evaluated.
    pub error: Option<String>,
    #[serde(skip)]
    pub seconds: f64,
}

impl CheckOutcome {
    /// One-line human summary.
    pub fn summary(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let body = match &self.error {
            Some(e) => format!("error: {e}"),
            None => self
                .measurements
                .iter()
                .map(|m| {
                    let op = match m.comparison {
                        Comparison::AtMost => "<=",
                        Comparison::AtLeast => ">=",
                        Comparison::Holds => {
                            return format!(
                                "{} {}",
                                m.label,
                                if m.passed { "holds" } else { "fails" }
                            )
                        }
                    };
                    let mark = if m.passed { "" } else { " !" };
                    format!("{} {:.3e} {op} {:.1e}{mark}", m.label, m.value, m.threshold)
                })
                .collect::<Vec<_>>()
                .join("; "),
        };
        format!(
            "[{status}] {:<22} {body} ({:.1} s)",
            self.name, self.seconds
        )
    }
}

impl Check {
    pub fn run(&self, opts: &VerifyOptions) -> CheckOutcome {
        let start = Instant::now();
        let result = (self.run)(opts);
        let seconds = start.elapsed().as_secs_f64();
        let (measurements, error) = match result {
            Ok(m) => (m, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        let passed =
            error.is_none() && !measurements.is_empty() && measurements.iter().all(|m| m.passed);
        CheckOutcome {
            name: self.name.to_string(),
            title: self.title.to_string(),
            passed,
            measurements,
            error,
            seconds,
        }
    }
}

/// All checks in a fixed order.
pub fn registry() -> Vec<Check> {
    vec![
        Check {
            name: "free-fermion",
            title: "Free-fermion anchor of the ground state",
            run: free_fermion,
        },
        Check {
            name: "yang-yang",
            title: "Yang-Yang low-temperature law",
            run: yang_yang,
        },
        Check {
            name: "excited-expansion",
            title: "Excited-state low-temperature expansion",
            run: excited_expansion,
        },
        Check {
            name: "decay-rate",
            title: "Correlation-length decay rate, numeric vs closed form",
            run: decay_rate,
        },
        Check {
            name: "w-identity",
            title: "W summation identity",
            run: w_identity,
        },
        Check {
            name: "gamma-integral",
            title: "Gamma-integral identity",
            run: gamma_integral,
        },
        Check {
            name: "smooth-amplitude",
            title: "Smooth amplitude properties",
            run: smooth_properties,
        },
        Check {
            name: "discrete-limit",
            title: "Discrete amplitude low-temperature limit",
            run: discrete_limit,
        },
        Check {
            name: "edge-asymptotics",
            title: "Edge and double-integral asymptotics",
            run: edge_asymptotics,
        },
        Check {
            name: "assembly",
            title: "Asymptotic series assembly",
            run: assembly,
        },
        Check {
            name: "grid-hygiene",
            title: "Grid-doubling stability of golden scalars",
            run: grid_hygiene,
        },
    ]
}

pub fn find(name: &str) -> Option<Check> {
    registry().into_iter().find(|c| c.name == name)
}

/// Runs the selected checks (all when `only` is empty) in registry order.
pub fn run_checks(
    only: &[String],
    opts: &VerifyOptions,
) -> std::result::Result<Vec<CheckOutcome>, String> {
    let all = registry();
    for n in only {
        if !all.iter().any(|c| c.name == n) {
            let names: Vec<_> = all.iter().map(|c| c.name).collect();
            return Err(format!("unknown check '{n}' (known: {})", names.join(", ")));
        }
    }
    Ok(all
        .iter()
        .filter(|c| only.is_empty() || only.iter().any(|n| n == c.name))
        .map(|c| c.run(opts))
        .collect())
}

fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// ℓ = 1, p⁺ = {1}, h⁻ = {1}.
pub fn benchmark_class() -> ExcitationClass {
    ExcitationClass::new(1, vec![1], vec![], vec![], vec![1]).expect("valid benchmark class")
}

fn benchmark_solution(gs: &Arc<GroundState>, t: f64) -> Result<ExcitedSolution> {
    let th = Arc::new(ThermalSolution::solve_with(
        gs.clone(),
        t,
        ThermalConfig::default(),
    )?);
    solve_u_with(th, &benchmark_class(), cx(0.0), ExcitedConfig::default())
}

fn free_fermion(o: &VerifyOptions) -> Result<Vec<Measurement>> {
    let g = o.ground(1e6, 1.0)?;
    Ok(vec![
        o.at_most("|q-1|", (g.q - 1.0).abs(), 1e-3),
        o.at_most("|Z-1|", (g.zq - 1.0).abs(), 1e-3),
        o.at_most("|v0-2|", (g.v0 - 2.0).abs(), 2e-3),
        o.at_most("|D-1/pi|", (g.density - 1.0 / PI).abs(), 1e-3),
    ])
}

fn yang_yang(o: &VerifyOptions) -> Result<Vec<Measurement>> {
    let g = o.ground(1.0, 1.0)?;
    let r = verify_yang_yang_low_t(g, &[0.04, 0.02, 0.01], ThermalConfig::default())?;
    Ok(vec![
        o.at_least("exponent", r.fit.exponent, 2.7),
        o.at_most(
            "T^2 coefficient rel. error",
            (r.t2_coefficient_fitted / r.t2_coefficient_predicted - 1.0).abs(),
            0.02,
        ),
    ])
}

fn excited_expansion(o: &VerifyOptions) -> Result<Vec<Measurement>> {
    let g = o.ground(1.0, 1.0)?;
    let class = benchmark_class();
    let off = root_offsets_unconstrained(&g, &class, cx(0.0))?;
    let ts = [0.02, 0.01, 0.005];
    let mut rem = Vec::new();
    for &t in &ts {
        let sol = benchmark_solution(&g, t)?;
        let mut worst = 0.0f64;
        for (x, v) in sol.u.nodes().iter().zip(sol.u.values()) {
            if x.re.abs() <= 0.9 * g.q {
                let pred =
                    g.eps0_at(*x) + t * u1_at(&g, cx(0.0), 1, *x) + t * t * u2_at(&g, &off, *x);
                worst = worst.max((v - pred).norm());
            }
        }
        rem.push(worst);
    }
    Ok(vec![o.at_least(
        "exponent",
        log_log_slope(&ts, &rem).unwrap_or(f64::NAN),
        2.7,
    )])
}

fn decay_rate(o: &VerifyOptions) -> Result<Vec<Measurement>> {
    let g = o.ground(1.0, 1.0)?;
    let class = benchmark_class();
    let ts = [0.02, 0.01, 0.005];
    let target = -2.0 * alpha_ell(cx(0.0), class.ell).re * g.kf;
    let (mut diff, mut im_dev) = (Vec::new(), 0.0f64);
    for &t in &ts {
        let num = decay_rate_numeric(&benchmark_solution(&g, t)?)?;
        diff.push((num - decay_rate_closed(&g, &class, cx(0.0), t)).norm());
        im_dev = im_dev.max((num.im - target).abs());
    }
    Ok(vec![
        o.at_least(
            "exponent",
            log_log_slope(&ts, &diff).unwrap_or(f64::NAN),
            1.7,
        ),
        o.at_most("max |Im p_num + 2 alpha_l kF|", im_dev, 1e-6),
    ])
}

fn w_identity(o: &VerifyOptions) -> Result<Vec<Measurement>> {
    let mut worst = 0.0f64;
    for nu in [cx(0.3), Complex64::new(-0.25, 0.1)] {
        for r in -1..=2 {
            for tau in [1.0, 2.0] {
                let a = w_series(nu, r, tau, 60)?;
                let b = w_closed(nu, r, tau)?;
                worst = worst.max(((a - b) / b).norm());
            }
        }
    }
    Ok(vec![o.at_most("max rel. error", worst, 1e-8)])
}

fn gamma_integral(o: &VerifyOptions) -> Result<Vec<Measurement>> {
    [(0.4, 0.4, 1.3), (0.3, 0.7, 1.0), (-0.4, 0.4, 2.0)]
        .iter()
        .map(|&(a, b, p)| {
            Ok(o.at_most(
                format!("residual({a},{b},{p})"),
                verify_gamma_integral_identity(a, b, p)?,
                1e-8,
            ))
        })
        .collect()
}

fn smooth_properties(o: &VerifyOptions) -> Result<Vec<Measurement>> {
    let g = o.ground(1.0, 1.0)?;
    let q = g.q;
    let opts = o.smooth();
    let a = smooth_amplitude_with(&g, cx(0.2), 1, &opts)?.value;
    let moved = SmoothOptions {
        theta: Some((Complex64::new(-q, 0.1 * q), Complex64::new(q, -0.1 * q))),
        ..opts.clone()
    };
    let b = smooth_amplitude_with(&g, cx(0.2), 1, &moved)?.value;
    let near = smooth_amplitude_with(&g, cx(1e-4), 0, &opts)?.value;
    let at0 = smooth_amplitude(&g, cx(0.0), 1)?;
    let h = 1e-6;
    let d = (smooth_amplitude_with(&g, cx(h), 1, &opts)?.value
        - smooth_amplitude_with(&g, cx(-h), 1, &opts)?.value)
        / (2.0 * h);
    Ok(vec![
        o.at_most("theta dependence", ((a - b) / a).norm(), 1e-6),
        o.at_most("|B(1e-4, 0) - 1|", (near - 1.0).norm(), 1e-3),
        o.holds("B(0, 1) = 0", at0 == cx(0.0)),
        o.at_most("|dB/dalpha(0, 1)|", d.norm(), 1e-6),
    ])
}

fn discrete_limit(o: &VerifyOptions) -> Result<Vec<Measurement>> {
    let g = o.ground(1.0, 1.0)?;
    let ts = [0.02, 0.01, 0.005];
    let mut rel = Vec::new();
    for &t in &ts {
        let sol = benchmark_solution(&g, t)?;
        let (k, a) = sol.canonical()?;
        let w = discrete_weight(&g, alpha_ell(a, k.ell), t)?;
        let lim = discrete_amplitude(&g, &k, a)?;
        rel.push((bd_finite_t(&sol)?.value * w / lim - 1.0).norm());
    }
    Ok(vec![o.at_least(
        "exponent",
        log_log_slope(&ts, &rel).unwrap_or(f64::NAN),
        0.7,
    )])
}

fn edge_asymptotics(o: &VerifyOptions) -> Result<Vec<Measurement>> {
    let g = o.ground(1.0, 1.0)?;
    let ts = [0.02, 0.01, 0.005];
    let (mut edge, mut dint) = (Vec::new(), Vec::new());
    for &t in &ts {
        let sol = benchmark_solution(&g, t)?;
        edge.push(verify_cauchy_edge(&sol)?.max_deviation);
        dint.push(verify_double_integral(&sol)?.deviation);
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    Ok(vec![
        o.at_most("edge deviation at T=0.01", edge[1], 0.15),
        o.at_most("double-integral deviation at T=0.01", dint[1], 0.15),
        o.holds("edge deviations decrease", decreasing(&edge)),
        o.holds("double-integral deviations decrease", decreasing(&dint)),
    ])
}

fn assembly(o: &VerifyOptions) -> Result<Vec<Measurement>> {
    let g = o.ground(1.0, 1.0)?;
    let opts = o.smooth();
    let t = 0.01;
    let x = 2.0 * g.v0 / (PI * t);
    let alpha = Complex64::new(0.3, 0.05);
    let a = generating_asymptotics_with(&g, alpha, x, t, 2, &opts)?;
    let b = generating_asymptotics_with(&g, alpha + 1.0, x, t, 2, &opts)?;
    let mut periodic = 0.0f64;
    for ta in &a.terms {
        if let Some(tb) = b.term(ta.ell - 1) {
            periodic =
                periodic.max((ta.value - tb.value).norm() / ta.value.norm().max(a.value.norm()));
        }
    }
    let harmonics = harmonic_amplitudes_with(&g, 2, DEFAULT_FD_STEP, &opts)?;
    let mut reality = 0.0f64;
    for k in 1..=4 {
        let s = assemble_correlator(&g, &harmonics, x * (0.5 + 0.37 * k as f64), t)?;
        reality = reality.max(s.total.im.abs() / s.total.re.abs());
    }
    let fd = ell0_sector_by_differences(&g, x, t, DEFAULT_FD_STEP)?;
    let closed = g.density * g.density + ell0_closed_form(&g, x, t);
    Ok(vec![
        o.at_most("periodicity", periodic, 1e-10),
        o.at_most("|Im|/|Re| of correlator", reality, 1e-9),
        o.at_most(
            "l=0 closed vs finite differences",
            (fd.value - closed).norm() / closed.abs(),
            1e-6,
        ),
    ])
}

fn grid_hygiene(o: &VerifyOptions) -> Result<Vec<Measurement>> {
    let base_cfg = o.ground_config();
    let base_opts = o.smooth();
    let scalars = |cfg: GroundStateConfig, opts: &SmoothOptions| -> Result<[f64; 5]> {
        let g = GroundState::build_with(&ModelParams::ground(1.0, 1.0)?, cfg)?;
        let a0 = amplitude_tilde_unconstrained(&g, cx(0.2), 0, opts)?.a_tilde;
        let a1 = amplitude_tilde_unconstrained(&g, cx(0.2), 1, opts)?.a_tilde;
        Ok([g.q, g.zq, g.v0, a0.norm(), a1.norm()])
    };
    let coarse = scalars(base_cfg, &base_opts)?;
    let fine = scalars(
        GroundStateConfig {
            nodes: 2 * base_cfg.nodes,
            ..base_cfg
        },
        &SmoothOptions {
            nodes: 2 * base_opts.nodes,
            ..base_opts.clone()
        },
    )?;
    let labels = ["q", "Z", "v0", "|A0|", "|A1|"];
    Ok(labels
        .iter()
        .zip(coarse.iter().zip(&fine))
        .map(|(l, (a, b))| o.at_most(format!("rel. change {l}"), ((a - b) / b).abs(), 1e-8))
        .collect())
}
