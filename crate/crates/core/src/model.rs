//! Physical parameters and the Lieb kernel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coupling c, chemical potential h, temperature T and twist α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c: f64,
    pub h: f64,
    pub t: f64,
    pub alpha: Complex64,
}

impl ModelParams {
    pub fn new(c: f64, h: f64, t: f64, alpha: Complex64) -> Result<Self> {
        let p = Self { c, h, t, alpha };
        p.validate()?;
        Ok(p)
    }

    /// Zero-temperature, untwisted parameters.
    pub fn ground(c: f64, h: f64) -> Result<Self> {
        Self::new(c, h, 0.0, Complex64::new(0.0, 0.0))
    }

    pub fn with_temperature(self, t: f64) -> Result<Self> {
        Self::new(self.c, self.h, t, self.alpha)
    }

    pub fn with_alpha(self, alpha: Complex64) -> Result<Self> {
        Self::new(self.c, self.h, self.t, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidInput(format!(
                "coupling must be positive, got c = {}",
                self.c
            )));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidInput(format!(
                "chemical potential must be positive, got h = {}",
                self.h
            )));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return Err(Error::InvalidInput(format!(
                "temperature must be non-negative, got T = {}",
                self.t
            )));
        }
        if !self.alpha.re.is_finite() || !self.alpha.im.is_finite() {
            return Err(Error::InvalidInput("alpha must be finite".into()));
        }
        Ok(())
    }
}

/// K(x) = 2c / (x² + c²).
pub fn kernel(c: f64, x: Complex64) -> Complex64 {
    2.0 * c / (x * x + c * c)
}

/// K'(x).
pub fn kernel_d1(c: f64, x: Complex64) -> Complex64 {
    let d = x * x + c * c;
    -4.0 * c * x / (d * d)
}

/// K''(x).
pub fn kernel_d2(c: f64, x: Complex64) -> Complex64 {
    let d = x * x + c * c;
    4.0 * c * (3.0 * x * x - c * c) / (d * d * d)
}

/// θ(x) = 2 arctan(x / c), the antiderivative of K vanishing at 0.
pub fn theta(c: f64, x: Complex64) -> Complex64 {
    2.0 * (x / c).atan()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::ground(0.0, 1.0).is_err());
        let e = ModelParams::ground(1.0, -1.0).unwrap_err();
        assert!(e
            .to_string()
            .contains("chemical potential must be positive"));
        assert!(ModelParams::new(1.0, 1.0, -0.1, Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = 0.8;
        let d = 1e-5;
        for &x in &[Complex64::new(0.3, 0.1), Complex64::new(-1.2, -0.4)] {
            let fd1 = (kernel(c, x + d) - kernel(c, x - d)) / (2.0 * d);
            assert!((fd1 - kernel_d1(c, x)).norm() < 1e-8);
            let fd2 = (kernel_d1(c, x + d) - kernel_d1(c, x - d)) / (2.0 * d);
            assert!((fd2 - kernel_d2(c, x)).norm() < 1e-8);
            let fdt = (theta(c, x + d) - theta(c, x - d)) / (2.0 * d);
            assert!((fdt - kernel(c, x)).norm() < 1e-8);
        }
    }

    #[test]
    fn theta_matches_log_form() {
        let c = 1.3;
        for &x in &[
            Complex64::new(0.5, 0.2),
            Complex64::new(-2.0, -0.9),
            Complex64::new(4.0, 1.2),
        ] {
            let i = Complex64::i();
            let log_form = i * ((i * c + x) / (i * c - x)).ln();
            assert!((theta(c, x) - log_form).norm() < 1e-13);
        }
    }
}
