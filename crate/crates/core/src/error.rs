use thiserror::Error;

/// Why a parameter point has no Hopf analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("no nontrivial equilibrium: (beta0/delta)(k-1)-1 = {0:.6e} <= 0")]
    NoEquilibrium(f64),
    #[error("case II (B1 = {0:.6e} > 0): x2 is stable, no Hopf point")]
    CaseTwo(f64),
    #[error("no Hopf frequency: |kB1| = {q:.6e} <= |delta+B1| = {p:.6e}")]
    NoHopfFrequency { p: f64, q: f64 },
    #[error("no sign change of omega*cot(omega*r)+p on (0, pi/r)")]
    NoBracket,
    #[error("near-resonant configuration for w_{j}{k}: characteristic value {value:.3e}")]
    NearResonant { j: usize, k: usize, value: f64 },
    #[error("degenerate crossing: |1 + r kB1 e^(-i omega r)| = {0:.3e}")]
    DegenerateCrossing(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
