//! The subcommands. Each returns a table whose rows follow the order of the input sweep.

use std::f64::consts::PI;
use std::sync::Arc;

use bosegas_core::amplitude::amplitude_tilde_unconstrained;
use bosegas_core::correlator::{
    assemble_correlator, generating_asymptotics_with, harmonic_amplitudes_with, sectors,
};
use bosegas_core::excitation::{
    alpha_ell, decay_rate_closed, decay_rate_numeric, solve_u_with, u1_at_q,
};
use bosegas_core::thermal::eps2_at;
use bosegas_core::verify::{benchmark_class, run_checks, CheckOutcome, Comparison, VerifyOptions};
use bosegas_core::{
    Complex64, ExcitationClass, ExcitedConfig, GroundState, GroundStateConfig, ModelParams,
    SmoothOptions, ThermalConfig, ThermalSolution,
};
use serde_json::json;

use crate::config::{Format, RunConfig};
use crate::table::Table;
use crate::CliError;

fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn ground(cfg: &RunConfig, c: f64, h: f64) -> Result<Arc<GroundState>, CliError> {
    let params = ModelParams::ground(c, h)?;
    let gcfg = GroundStateConfig {
        nodes: cfg.grid_n,
        ..GroundStateConfig::default()
    };
    Ok(Arc::new(GroundState::build_with(&params, gcfg)?))
}

fn smooth_options(cfg: &RunConfig) -> SmoothOptions {
    SmoothOptions {
        nodes: cfg.contour_n,
        ..SmoothOptions::default()
    }
}

/// Every (c, h) pair of the sweep, c outermost.
fn models(cfg: &RunConfig) -> impl Iterator<Item = (f64, f64)> + '_ {
    cfg.c
        .iter()
        .flat_map(move |&c| cfg.h.iter().map(move |&h| (c, h)))
}

/// `points` evenly spaced values on [-q, q].
fn lambda_samples(q: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n)
            .map(|k| -q + 2.0 * q * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn class_label(k: &ExcitationClass) -> String {
    let list = |v: &[i64]| v.iter().map(i64::to_string).collect::<Vec<_>>().join(" ");
    format!(
        "l={} p+=[{}] h+=[{}] p-=[{}] h-=[{}]",
        k.ell,
        list(&k.p_plus),
        list(&k.h_plus),
        list(&k.p_minus),
        list(&k.h_minus)
    )
}

pub fn ground_state(cfg: &RunConfig) -> Result<Table, CliError> {
    let mut table = Table::new();
    for (c, h) in models(cfg) {
        let gs = ground(cfg, c, h)?;
        let lambdas = lambda_samples(gs.q, cfg.curve_points);
        let samples: Vec<Option<f64>> = if lambdas.is_empty() {
            vec![None]
        } else {
            lambdas.into_iter().map(Some).collect()
        };
        for lambda in samples {
            table
                .row()
                .cell("c", "input/c", c)
                .cell("h", "input/h", h)
                .cell("q", "groundstate/fermi-boundary", gs.q)
                .cell("Z", "groundstate/dressed-charge-at-q", gs.zq)
                .cell("D", "groundstate/density", gs.density)
                .cell("kF", "groundstate/fermi-momentum", gs.kf)
                .cell("v0", "groundstate/fermi-velocity", gs.v0)
                .cell(
                    "eps0_prime_q",
                    "groundstate/dressed-energy-slope-at-q",
                    gs.eps0_prime_q,
                )
                .cell("lambda", "input/curve-sample", lambda)
                .cell(
                    "eps0",
                    "groundstate/dressed-energy",
                    lambda.map(|l| gs.eps0_at(cr(l)).re),
                )
                .cell(
                    "Z_lambda",
                    "groundstate/dressed-charge",
                    lambda.map(|l| gs.z_at(cr(l)).re),
                )
                .finish();
        }
    }
    Ok(table)
}

pub fn thermal(cfg: &RunConfig) -> Result<Table, CliError> {
    let mut table = Table::new();
    for (c, h) in models(cfg) {
        let gs = ground(cfg, c, h)?;
        for &t in &cfg.t {
            let sol = ThermalSolution::solve_with(gs.clone(), t, ThermalConfig::default())?;
            let weights = sol.grid.weights();
            let pressure = t / (2.0 * PI)
                * sol
                    .log_weight
                    .iter()
                    .zip(weights)
                    .map(|(l, w)| l * w.re)
                    .sum::<f64>();
            let eps_mid = sol.eps_at(cr(0.0)).re;
            let eps0_mid = gs.eps0_at(cr(0.0)).re;
            let lambdas = lambda_samples(gs.q, cfg.curve_points);
            let samples: Vec<Option<f64>> = if lambdas.is_empty() {
                vec![None]
            } else {
                lambdas.into_iter().map(Some).collect()
            };
            for lambda in samples {
                table
                    .row()
                    .cell("c", "input/c", c)
                    .cell("h", "input/h", h)
                    .cell("T", "input/T", t)
                    .cell("cutoff", "thermal/grid-cutoff", sol.cutoff)
                    .cell("iterations", "thermal/iterations", sol.iterations)
                    .cell("residual", "thermal/residual", sol.residual)
                    .cell("pressure", "thermal/pressure", pressure)
                    .cell("eps_0", "thermal/dressed-energy-at-0", eps_mid)
                    .cell("eps0_0", "groundstate/dressed-energy-at-0", eps0_mid)
                    .cell(
                        "shift_over_T2",
                        "thermal/low-temperature-shift-at-0",
                        (eps_mid - eps0_mid) / (t * t),
                    )
                    .cell(
                        "eps2_0",
                        "thermal/second-order-correction-at-0",
                        eps2_at(&gs, cr(0.0)).re,
                    )
                    .cell("lambda", "input/curve-sample", lambda)
                    .cell(
                        "eps",
                        "thermal/dressed-energy",
                        lambda.map(|l| sol.eps_at(cr(l)).re),
                    )
                    .cell(
                        "eps0",
                        "groundstate/dressed-energy",
                        lambda.map(|l| gs.eps0_at(cr(l)).re),
                    )
                    .finish();
            }
        }
    }
    Ok(table)
}

pub fn lengths(cfg: &RunConfig) -> Result<Table, CliError> {
    let mut classes: Vec<ExcitationClass> = sectors(cfg.ell_max)
        .into_iter()
        .map(ExcitationClass::lowest)
        .collect();
    if !classes.contains(&benchmark_class()) {
        classes.push(benchmark_class());
    }
    let mut table = Table::new();
    for (c, h) in models(cfg) {
        let gs = ground(cfg, c, h)?;
        for &t in &cfg.t {
            let thermal = if cfg.numeric {
                Some(Arc::new(ThermalSolution::solve_with(
                    gs.clone(),
                    t,
                    ThermalConfig::default(),
                )?))
            } else {
                None
            };
            for &alpha in &cfg.alpha {
                for class in &classes {
                    let closed = decay_rate_closed(&gs, class, alpha, t);
                    let numeric = thermal.as_ref().map(|th| {
                        solve_u_with(th.clone(), class, alpha, ExcitedConfig::default())
                            .and_then(|sol| decay_rate_numeric(&sol))
                    });
                    let (p_num, status) = match numeric {
                        None => (None, "not requested".to_string()),
                        Some(Ok(p)) => (Some(p), "ok".to_string()),
                        Some(Err(e)) => (None, e.to_string()),
                    };
                    let length = (closed.re > 0.0).then(|| 1.0 / closed.re);
                    table
                        .row()
                        .cell("c", "input/c", c)
                        .cell("h", "input/h", h)
                        .cell("T", "input/T", t)
                        .complex("alpha", "input/alpha", Some(alpha))
                        .cell("class", "excitation/class", class_label(class).as_str())
                        .cell("ell", "excitation/class", class.ell)
                        .cell("n", "excitation/class", class.n())
                        .cell("quantum_sum", "excitation/class", class.quantum_sum())
                        .complex("p_closed", "excitation/decay-rate-closed", Some(closed))
                        .cell("correlation_length", "excitation/decay-rate-closed", length)
                        .complex("p_numeric", "excitation/decay-rate-numeric", p_num)
                        .complex(
                            "p_difference",
                            "excitation/decay-rate-numeric",
                            p_num.map(|p| p - closed),
                        )
                        .cell(
                            "numeric_status",
                            "excitation/decay-rate-numeric",
                            status.as_str(),
                        )
                        .finish();
                }
            }
        }
    }
    Ok(table)
}

pub fn amplitudes(cfg: &RunConfig) -> Result<Table, CliError> {
    let opts = smooth_options(cfg);
    let mut table = Table::new();
    for (c, h) in models(cfg) {
        let gs = ground(cfg, c, h)?;
        let harmonics = harmonic_amplitudes_with(&gs, cfg.ell_max, cfg.fd_step, &opts)?;
        for &alpha in &cfg.alpha {
            for ell in sectors(cfg.ell_max) {
                let a = alpha_ell(alpha, ell);
                let u1 = u1_at_q(&gs, alpha, ell);
                let identity = a == cr(0.0);
                let r = if identity {
                    None
                } else {
                    Some(amplitude_tilde_unconstrained(&gs, alpha, ell, &opts)?)
                };
                let a_tilde = if identity {
                    Some(cr(1.0))
                } else {
                    r.as_ref().map(|r| r.a_tilde)
                };
                let harmonic = harmonics.iter().find(|hm| hm.ell == ell);
                table
                    .row()
                    .cell("c", "input/c", c)
                    .cell("h", "input/h", h)
                    .complex("alpha", "input/alpha", Some(alpha))
                    .cell("ell", "input/ell", ell)
                    .complex("alpha_ell", "excitation/shifted-twist", Some(a))
                    .cell("im_u1_q", "excitation/u1-at-q", u1.im)
                    .cell("in_strip", "excitation/u1-at-q", u1.im > -PI && u1.im < PI)
                    .complex(
                        "exponent",
                        "amplitude/exponent",
                        Some(2.0 * (a * gs.zq).powi(2)),
                    )
                    .complex(
                        "b_smooth",
                        "amplitude/smooth-amplitude",
                        r.as_ref().map(|r| r.b_smooth),
                    )
                    .complex(
                        "b_discrete",
                        "amplitude/discrete-amplitude",
                        r.as_ref().and_then(|r| r.b_discrete_class),
                    )
                    .complex("a_tilde", "amplitude/sector-amplitude", a_tilde)
                    .cell(
                        "pivot_ratio_min",
                        "amplitude/fredholm-pivots",
                        r.as_ref().map(|r| r.smooth.pivot_ratios.0),
                    )
                    .complex(
                        "harmonic_amplitude",
                        "correlator/harmonic-amplitude",
                        harmonic.map(|hm| hm.amplitude),
                    )
                    .cell(
                        "richardson_disagreement",
                        "correlator/harmonic-amplitude",
                        harmonic.map(|hm| hm.second_derivative.richardson_disagreement),
                    )
                    .finish();
            }
        }
    }
    Ok(table)
}

pub fn correlator(cfg: &RunConfig) -> Result<Table, CliError> {
    if cfg.x.is_empty() {
        return Err(CliError::Input(
            "correlator needs at least one distance (set x)".into(),
        ));
    }
    let opts = smooth_options(cfg);
    let ells = sectors(cfg.ell_max);
    let mut table = Table::new();
    for (c, h) in models(cfg) {
        let gs = ground(cfg, c, h)?;
        let harmonics = harmonic_amplitudes_with(&gs, cfg.ell_max, cfg.fd_step, &opts)?;
        for &alpha in &cfg.alpha {
            let base =
                generating_asymptotics_with(&gs, alpha, cfg.x[0], cfg.t[0], cfg.ell_max, &opts)?;
            for &t in &cfg.t {
                for &x in &cfg.x {
                    let series = assemble_correlator(&gs, &harmonics, x, t)?;
                    let generating = base.at(&gs, x, t)?;
                    let mut row = table
                        .row()
                        .cell("c", "input/c", c)
                        .cell("h", "input/h", h)
                        .complex("alpha", "input/alpha", Some(alpha))
                        .cell("T", "input/T", t)
                        .cell("x", "input/x", x)
                        .complex("total", "correlator/density-correlator", Some(series.total))
                        .cell("constant", "correlator/density-squared", series.constant)
                        .cell("ell0_term", "correlator/zero-harmonic", series.ell0_term);
                    for hm in &series.oscillating {
                        let tag = format!("harm{:+}", hm.ell);
                        row = row
                            .complex(
                                &format!("{tag}_amp"),
                                "correlator/harmonic-amplitude",
                                Some(hm.amplitude),
                            )
                            .cell(
                                &format!("{tag}_envelope"),
                                "correlator/thermal-envelope",
                                hm.envelope,
                            )
                            .complex(
                                &format!("{tag}_term"),
                                "correlator/harmonic-term",
                                Some(hm.value),
                            );
                    }
                    row = row.complex(
                        "gen_value",
                        "correlator/generating-function",
                        Some(generating.value),
                    );
                    for &ell in &ells {
                        let term = generating.term(ell);
                        let tag = format!("gen{ell:+}");
                        row = row
                            .complex(
                                &format!("{tag}_amp"),
                                "amplitude/sector-amplitude",
                                term.map(|t| t.amplitude),
                            )
                            .complex(
                                &format!("{tag}_envelope"),
                                "correlator/thermal-envelope",
                                term.map(|t| t.envelope),
                            )
                            .complex(
                                &format!("{tag}_term"),
                                "correlator/generating-term",
                                term.map(|t| t.value),
                            );
                    }
                    row.finish();
                }
            }
        }
    }
    Ok(table)
}

/// Outcomes of a verification run.
pub struct VerifyReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<String> {
        self.outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.name.clone())
            .collect()
    }

    pub fn encode(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => {
                let doc = json!({
                    "command": "verify",
                    "passed": self.failures().is_empty(),
                    "failures": self.failures(),
                    "checks": self.outcomes,
                });
                let mut text =
                    serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
                text.push('\n');
                Ok(text.into_bytes())
            }
            Format::Csv => {
                let mut table = Table::new();
                for o in &self.outcomes {
                    let rows: Vec<_> = if o.measurements.is_empty() {
                        vec![None]
                    } else {
                        o.measurements.iter().map(Some).collect()
                    };
                    for m in rows {
                        table
                            .row()
                            .cell("check", "verify/check", o.name.as_str())
                            .cell("check_passed", "verify/check", o.passed)
                            .cell(
                                "measurement",
                                "verify/measurement",
                                m.map(|m| m.label.as_str()),
                            )
                            .cell("value", "verify/measurement", m.map(|m| m.value))
                            .cell("threshold", "verify/measurement", m.map(|m| m.threshold))
                            .cell(
                                "comparison",
                                "verify/measurement",
                                m.map(|m| match m.comparison {
                                    Comparison::AtMost => "at-most",
                                    Comparison::AtLeast => "at-least",
                                    Comparison::Holds => "holds",
                                }),
                            )
                            .cell(
                                "measurement_passed",
                                "verify/measurement",
                                m.map(|m| m.passed),
                            )
                            .cell("error", "verify/check", o.error.as_deref())
                            .finish();
                    }
                }
                let mut buf = Vec::new();
                table.write_csv(&mut buf)?;
                Ok(buf)
            }
        }
    }
}

pub fn verify(cfg: &RunConfig, only: &[String]) -> Result<VerifyReport, CliError> {
    let opts = VerifyOptions {
        tolerance_override: cfg.tolerance,
        grid_nodes: Some(cfg.grid_n),
        contour_nodes: Some(cfg.contour_n),
    };
    let outcomes = run_checks(only, &opts).map_err(CliError::Input)?;
    Ok(VerifyReport { outcomes })
}
