//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::str::FromStr;

use bosegas_core::Complex64;

use crate::CliError;

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Input(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

/// Every setting of a run. Lists are comma separated; `a:b:n` expands to n evenly spaced
/// values from a to b.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub c: Vec<f64>,
    pub h: Vec<f64>,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub alpha: Vec<Complex64>,
    pub ell_max: i64,
    pub fd_step: f64,
    pub grid_n: usize,
    pub contour_n: usize,
    /// Number of λ samples per curve; 0 emits scalars only.
    pub curve_points: usize,
    /// Also solve the excited-state equation for the decay rates.
    pub numeric: bool,
    /// Replaces every tolerance of the verification checks.
    pub tolerance: Option<f64>,
    /// CSV for tables and JSON for `verify` when unset.
    pub format: Option<Format>,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            c: vec![1.0],
            h: vec![1.0],
            t: vec![0.01],
            x: Vec::new(),
            alpha: vec![Complex64::new(0.0, 0.0)],
            ell_max: 2,
            fd_step: 1e-3,
            grid_n: 96,
            contour_n: 256,
            curve_points: 0,
            numeric: false,
            tolerance: None,
            format: None,
            out: None,
        }
    }
}

pub const KEYS: [&str; 14] = [
    "c",
    "h",
    "t",
    "x",
    "alpha",
    "ell_max",
    "fd_step",
    "grid_n",
    "contour_n",
    "curve_points",
    "numeric",
    "tolerance",
    "format",
    "out",
];

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Input(format!("{key}: cannot parse '{value}' as {what}"))
}

fn real(key: &str, s: &str) -> Result<f64, CliError> {
    let v: f64 = s.trim().parse().map_err(|_| bad(key, s, "a number"))?;
    if !v.is_finite() {
        return Err(bad(key, s, "a finite number"));
    }
    Ok(v)
}

fn reals(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [one] => out.push(real(key, one)?),
            [a, b, n] => {
                let (a, b) = (real(key, a)?, real(key, b)?);
                let n: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| bad(key, item, "a range a:b:n"))?;
                if n == 0 {
                    return Err(bad(key, item, "a range with at least one point"));
                }
                if n == 1 {
                    out.push(a);
                } else {
                    out.extend((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64));
                }
            }
            _ => return Err(bad(key, item, "a number or a range a:b:n")),
        }
    }
    if out.is_empty() {
        return Err(bad(key, s, "a non-empty list"));
    }
    Ok(out)
}

fn complexes(key: &str, s: &str) -> Result<Vec<Complex64>, CliError> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if item.contains(':') {
            out.extend(
                reals(key, item)?
                    .into_iter()
                    .map(|r| Complex64::new(r, 0.0)),
            );
            continue;
        }
        let z = Complex64::from_str(item)
            .map_err(|_| bad(key, item, "a complex number like 0.2+0.05i"))?;
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(bad(key, item, "a finite complex number"));
        }
        out.push(z);
    }
    if out.is_empty() {
        return Err(bad(key, s, "a non-empty list"));
    }
    Ok(out)
}

fn count(key: &str, s: &str) -> Result<usize, CliError> {
    s.trim()
        .parse()
        .map_err(|_| bad(key, s, "a non-negative integer"))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "c" => self.c = reals(key, value)?,
            "h" => self.h = reals(key, value)?,
            "t" => self.t = reals(key, value)?,
            "x" => self.x = reals(key, value)?,
            "alpha" => self.alpha = complexes(key, value)?,
            "ell_max" => {
                self.ell_max = value.parse().map_err(|_| bad(key, value, "an integer"))?;
                if self.ell_max < 0 {
                    return Err(bad(key, value, "a non-negative integer"));
                }
            }
            "fd_step" => self.fd_step = real(key, value)?,
            "grid_n" => self.grid_n = count(key, value)?,
            "contour_n" => self.contour_n = count(key, value)?,
            "curve_points" => self.curve_points = count(key, value)?,
            "numeric" => {
                self.numeric = value
                    .parse()
                    .map_err(|_| bad(key, value, "true or false"))?;
            }
            "tolerance" => self.tolerance = Some(real(key, value)?),
            "format" => self.format = Some(value.parse()?),
            "out" => self.out = Some(value.to_string()),
            other => {
                return Err(CliError::Input(format!(
                    "unknown configuration key '{other}' (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses the text of a configuration file; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        let mut seen = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("line {}: expected key = value", no + 1)))?;
            if let Some(prev) = seen.insert(k.trim().to_string(), no + 1) {
                return Err(CliError::Input(format!(
                    "line {}: key '{}' already set on line {prev}",
                    no + 1,
                    k.trim()
                )));
            }
            self.set(k, v)
                .map_err(|e| CliError::Input(format!("line {}: {}", no + 1, e.message())))?;
        }
        Ok(())
    }

    /// Applies a command-line override of the form `key=value`.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), CliError> {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            CliError::Input(format!("override '{kv}' is not of the form key=value"))
        })?;
        self.set(k, v)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for &c in &self.c {
            if !(c > 0.0) {
                return Err(CliError::Input(format!(
                    "coupling must be positive, got c = {c}"
                )));
            }
        }
        for &h in &self.h {
            if !(h > 0.0) {
                return Err(CliError::Input(format!(
                    "chemical potential must be positive, got h = {h}"
                )));
            }
        }
        for &t in &self.t {
            if !(t > 0.0) {
                return Err(CliError::Input(format!(
                    "temperature must be positive, got T = {t}"
                )));
            }
        }
        for &x in &self.x {
            if !(x > 0.0) {
                return Err(CliError::Input(format!(
                    "distance must be positive, got x = {x}"
                )));
            }
        }
        if self.grid_n < 8 {
            return Err(CliError::Input(format!(
                "grid_n must be at least 8, got {}",
                self.grid_n
            )));
        }
        if self.contour_n < 16 {
            return Err(CliError::Input(format!(
                "contour_n must be at least 16, got {}",
                self.contour_n
            )));
        }
        if !(self.fd_step > 0.0) {
            return Err(CliError::Input(format!(
                "fd_step must be positive, got {}",
                self.fd_step
            )));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0) {
                return Err(CliError::Input(format!(
                    "tolerance must be positive, got {t}"
                )));
            }
        }
        Ok(())
    }
}
