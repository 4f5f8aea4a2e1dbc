//! Fixtures shared by the criterion benches.

use hopfx_core::{hopf_delay, GridSpec, HopfPoint, Parameters};

/// Degenerate Hopf point for n = 2, beta0 = 1, k = 1.5.
pub const CODIM2_DELTA: f64 = 0.0440140630;

pub fn params(delta: f64) -> Parameters {
    Parameters::new(1.0, 2.0, delta, 1.5, None).expect("valid fixture")
}

pub fn hopf_point(delta: f64) -> HopfPoint {
    hopf_delay(&params(delta)).expect("fixture lies on the Hopf surface")
}

/// One row of the published n = 2 grid, small enough to time repeatedly.
pub fn small_grid() -> GridSpec {
    GridSpec {
        beta0_values: vec![1.0],
        k_values: vec![1.1, 1.5, 1.9],
        ..GridSpec::single_n(2.0)
    }
}
