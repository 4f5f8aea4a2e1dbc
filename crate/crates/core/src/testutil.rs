//! Shared fixtures for unit tests.

use rand::{Rng, SeedableRng};

use crate::model::Parameters;
use crate::stability::{hopf_delay, HopfPoint};

pub const FIG3_DELTA: f64 = 0.0440140630;

pub fn params(beta0: f64, n: f64, delta: f64, k: f64) -> Parameters {
    Parameters::without_delay(beta0, n, delta, k).unwrap()
}

/// Hopf point of the `n = 2, beta0 = 1, k = 1.5` table row.
pub fn fig3_point() -> HopfPoint {
    hopf_delay(&params(1.0, 2.0, FIG3_DELTA, 1.5)).unwrap()
}

/// Seeded random Hopf points with `n` in `[1.5, 12)`.
pub fn random_hopf_points(count: usize, seed: u64) -> Vec<HopfPoint> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let n = rng.gen_range(1.5..12.0);
        let beta0 = rng.gen_range(0.3..3.0);
        let k = rng.gen_range(1.05..2.0);
        let delta = rng.gen_range(0.001..0.9) * beta0 * (k - 1.0);
        if let Ok(h) = hopf_delay(&params(beta0, n, delta, k)) {
            out.push(h);
        }
    }
    out
}
