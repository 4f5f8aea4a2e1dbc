//! Hopf and degenerate Hopf analysis of the delay equation
//!
//! `x'(t) = -[beta0 / (1 + x(t)^n) + delta] x(t) + k beta0 x(t - r) / (1 + x(t - r)^n)`.
//!
//! The pipeline runs from equilibria and linear stability through the
//! center-manifold reduction to the Lyapunov coefficients, the search for
//! points with `l1 = 0`, and direct simulation as an independent check.

pub mod center_manifold;
pub mod ddesim;
pub mod error;
pub mod lyapunov;
pub mod model;
pub mod qpoly;
pub mod search;
pub mod stability;

#[cfg(test)]
mod testutil;

pub use center_manifold::{build_wtable, projection_data, CoefficientTable, ProjectionData, WTable};
pub use ddesim::{
    detect_attractor, integrate, verify_direction, AttractorKind, AttractorReport, DirectionConfig, DirectionReport,
    ProbeSide, Trajectory,
};
pub use error::{DomainError, Error, Result};
pub use lyapunov::{l1, l2, lyapunov_at, Criticality, LyapunovReport};
pub use model::{equilibria, DerivativeSet, EquilibriumSet, Parameters};
pub use qpoly::QuasiPolynomial;
pub use search::{bisect_codim2, bracket_l1_sign_change, reproduce_tables, Codim2Record, GridSpec, TablesReport};
pub use stability::{classify, hopf_delay, hopf_surface_mesh, CaseLabel, HopfMesh, HopfPoint, RangeSpec, StabilityVerdict};
