use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{function} has a pole at {at}")]
    Pole {
        function: &'static str,
        at: Complex64,
    },

    #[error("evaluation point {0} lies on the integration support")]
    OnSupport(Complex64),

    #[error("singular linear system (pivot ratio {pivot_ratio:e})")]
    Singular { pivot_ratio: f64 },

    #[error("boundary condition has no sign change in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("logarithm branch tracking failed: {0}")]
    Branch(String),

    #[error("Im u1 = {im_u1} outside (-pi, pi); shift alpha by {suggested_shift} to restore it")]
    Constraint { im_u1: f64, suggested_shift: i64 },

    #[error("contour geometry: {0}")]
    Geometry(String),

    #[error("temperature {t} exceeds the low-temperature gate {gate}")]
    TemperatureGate { t: f64, gate: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True when the failure is caused by the caller's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::OnSupport(_)
                | Error::Constraint { .. }
                | Error::TemperatureGate { .. }
                | Error::Geometry(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
