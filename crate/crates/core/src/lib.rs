//! Thermodynamics and low-temperature correlation asymptotics of the
//! one-dimensional Bose gas with contact interaction.

pub mod amplitude;
pub mod correlator;
pub mod error;
pub mod excitation;
pub mod groundstate;
pub mod model;
pub mod numerics;
pub mod specfun;
pub mod thermal;
pub mod verify;

pub use amplitude::{AmplitudeResult, SmoothAmplitude, SmoothOptions};
pub use correlator::{CorrelatorSeries, GeneratingSeries, HarmonicAmplitude};
pub use error::{Error, Result};
pub use excitation::{ExcitationClass, ExcitedConfig, ExcitedSolution};
pub use groundstate::{GroundState, GroundStateConfig};
pub use model::ModelParams;
pub use num_complex::Complex64;
pub use thermal::{ThermalConfig, ThermalSolution};
