//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use bosegas_core::{GroundState, ModelParams, ThermalConfig, ThermalSolution};

/// Ground state at c = 1, h = 1.
pub fn ground() -> Arc<GroundState> {
    let params = ModelParams::ground(1.0, 1.0).expect("valid parameters");
    Arc::new(GroundState::build(&params).expect("ground state solves"))
}

/// Yang-Yang solution at c = 1, h = 1 and temperature `t`.
pub fn thermal(t: f64) -> Arc<ThermalSolution> {
    Arc::new(
        ThermalSolution::solve_with(ground(), t, ThermalConfig::default()).expect("thermal solve"),
    )
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_build() {
        let th = super::thermal(0.02);
        assert!(th.residual < 1e-10);
        assert!((th.ground.q - 1.17945).abs() < 1e-5);
    }
}
