//! The delay equation
//!
//! ```text
//! x'(t) = -[beta0 / (1 + x(t)^n) + delta] x(t) + k beta0 x(t-r) / (1 + x(t-r)^n)
//! ```
//!
//! its parameters, equilibria, and the derivatives `B_m = q^(m)(x2)` of
//! `q(x) = beta(x) x` at the nontrivial equilibrium.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on `(beta0/delta)(k-1) - 1` below which the nontrivial
/// equilibrium is treated as having merged with `x1 = 0`.
const BOUNDARY_RTOL: f64 = 1e-14;

/// Model constants. `r` is absent for operations that solve for the delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub beta0: f64,
    pub n: f64,
    pub delta: f64,
    pub k: f64,
    pub r: Option<f64>,
}

impl Parameters {
    pub fn new(beta0: f64, n: f64, delta: f64, k: f64, r: Option<f64>) -> Result<Self> {
        let p = Parameters { beta0, n, delta, k, r };
        p.validate()?;
        Ok(p)
    }

    /// Parameters without a delay.
    pub fn without_delay(beta0: f64, n: f64, delta: f64, k: f64) -> Result<Self> {
        Self::new(beta0, n, delta, k, None)
    }

    pub fn with_delay(self, r: f64) -> Result<Self> {
        Self::new(self.beta0, self.n, self.delta, self.k, Some(r))
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.beta0, self.n, self.delta, self.k]
            .iter()
            .chain(self.r.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameters("non-finite value".into()));
        }
        if self.beta0 <= 0.0 {
            return Err(Error::InvalidParameters(format!("beta0 = {} must be > 0", self.beta0)));
        }
        if self.delta <= 0.0 {
            return Err(Error::InvalidParameters(format!("delta = {} must be > 0", self.delta)));
        }
        if self.n < 1.0 {
            return Err(Error::InvalidParameters(format!("n = {} must be >= 1", self.n)));
        }
        if let Some(r) = self.r {
            if r <= 0.0 {
                return Err(Error::InvalidParameters(format!("r = {r} must be > 0")));
            }
        }
        Ok(())
    }

    /// `k <= 2` (from `k = 2 exp(-gamma r)`); checked by everything that uses `x2`.
    pub fn check_k_upper(&self) -> Result<()> {
        if self.k > 2.0 {
            return Err(Error::InvalidParameters(format!("k = {} must be <= 2", self.k)));
        }
        Ok(())
    }

    pub fn delay(&self) -> Result<f64> {
        self.r
            .ok_or_else(|| Error::InvalidParameters("delay r is required".into()))
    }

    /// `(beta0/delta)(k-1) - 1`; `x2` exists iff positive.
    pub fn existence_margin(&self) -> f64 {
        (self.beta0 / self.delta) * (self.k - 1.0) - 1.0
    }

    /// Same model under the time rescaling `t -> t/c`.
    pub fn rescaled(&self, c: f64) -> Self {
        Parameters {
            beta0: c * self.beta0,
            n: self.n,
            delta: c * self.delta,
            k: self.k,
            r: self.r.map(|r| r / c),
        }
    }
}

/// `beta(x) = beta0 / (1 + x^n)`.
pub fn beta(x: f64, params: &Parameters) -> f64 {
    params.beta0 / (1.0 + x.powf(params.n))
}

/// Right-hand side of the delay equation for state `x` and delayed state `x_delayed`.
pub fn vector_field(x: f64, x_delayed: f64, params: &Parameters) -> f64 {
    -(beta(x, params) + params.delta) * x + params.k * beta(x_delayed, params) * x_delayed
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub x1: f64,
    pub x2: Option<f64>,
    /// Set when `(beta0/delta)(k-1) = 1` to within the boundary tolerance.
    pub degenerate_boundary: bool,
}

pub fn equilibria(params: &Parameters) -> Result<EquilibriumSet> {
    params.validate()?;
    params.check_k_upper()?;
    let ratio = (params.beta0 / params.delta) * (params.k - 1.0);
    let margin = ratio - 1.0;
    let degenerate = margin.abs() <= BOUNDARY_RTOL * ratio.abs().max(1.0);
    let x2 = if margin > 0.0 && !degenerate {
        Some(margin.powf(1.0 / params.n))
    } else {
        None
    };
    Ok(EquilibriumSet {
        x1: 0.0,
        x2,
        degenerate_boundary: degenerate,
    })
}

/// `B_1 .. B_5`, the derivatives of `q(x) = beta(x) x` at `x2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSet {
    b: [f64; 5],
}

impl DerivativeSet {
    pub fn from_array(b: [f64; 5]) -> Self {
        DerivativeSet { b }
    }

    /// `B_m` for `m` in `1..=5`.
    pub fn b(&self, m: usize) -> f64 {
        assert!((1..=5).contains(&m), "B_m is defined for m in 1..=5");
        self.b[m - 1]
    }

    pub fn b1(&self) -> f64 {
        self.b[0]
    }

    pub fn as_array(&self) -> [f64; 5] {
        self.b
    }

    pub fn scaled(&self, c: f64) -> Self {
        DerivativeSet {
            b: self.b.map(|v| c * v),
        }
    }
}

/// Derivatives of `h(x) = 1/(1 + x^n)` up to order 5.
///
/// From `h (1 + v) = 1` with `v = x^n`, Leibniz gives
/// `h^(m) = -h * sum_{i<m} C(m,i) h^(i) v^(m-i)` and
/// `v^(j) = n (n-1) ... (n-j+1) x^(n-j)`.
fn hill_derivatives(x: f64, n: f64) -> [f64; 6] {
    let mut v = [0.0; 6];
    v[0] = x.powf(n);
    let mut falling = 1.0;
    for (j, vj) in v.iter_mut().enumerate().skip(1) {
        falling *= n - (j as f64 - 1.0);
        *vj = falling * x.powf(n - j as f64);
    }
    let mut h = [0.0; 6];
    h[0] = 1.0 / (1.0 + v[0]);
    for m in 1..6 {
        let s: f64 = (0..m).map(|i| binomial(m, i) * h[i] * v[m - i]).sum();
        h[m] = -h[0] * s;
    }
    h
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `B_m = beta^(m)(x2) x2 + m beta^(m-1)(x2)`.
pub fn derivative_set(params: &Parameters, x2: f64) -> DerivativeSet {
    let h = hill_derivatives(x2, params.n);
    let beta_d = h.map(|v| params.beta0 * v);
    let mut b = [0.0; 5];
    for m in 1..=5 {
        b[m - 1] = beta_d[m] * x2 + m as f64 * beta_d[m - 1];
    }
    DerivativeSet { b }
}

/// Closed form of `B_1` at `x2`, written in the model constants only.
pub fn b1_closed_form(params: &Parameters) -> f64 {
    let Parameters { beta0, n, delta, k, .. } = *params;
    delta / (k - 1.0) * (n * delta / (beta0 * (k - 1.0)) - n + 1.0)
}

/// `x2` and its derivative set, or the reason there is none.
pub fn nontrivial_equilibrium(params: &Parameters) -> Result<(f64, DerivativeSet)> {
    let eq = equilibria(params)?;
    let x2 = eq
        .x2
        .ok_or(crate::error::DomainError::NoEquilibrium(params.existence_margin()))?;
    Ok((x2, derivative_set(params, x2)))
}
