//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoemitError {
    #[error("negative rate in Lindblad specification: {0}")]
    InvalidRate(String),
    #[error("stationary state is not unique (null space dimension {0})")]
    DegenerateSteadyState(usize),
    #[error("generator is zero; no pumping and no decay")]
    NoPumpNoDecay,
    #[error("negative frequency passed to spectral density: {0}")]
    NegativeFrequency(f64),
    #[error("quadrature failed to reach relative tolerance {tol} (best error {err})")]
    QuadratureFailure { tol: f64, err: f64 },
    #[error("bond dimension overflow: needed {needed} > max_bond {max_bond} at truncation weight {weight:.3e}")]
    BondOverflow {
        needed: usize,
        max_bond: usize,
        weight: f64,
    },
    #[error("time-grid mismatch: {0}")]
    GridMismatch(String),
    #[error("zero emitted intensity; g2 undefined")]
    ZeroIntensity,
    #[error("state not stationary after settle window: residual {0:.3e}")]
    NotStationary(f64),
    #[error("parameter outside model validity domain: {0}")]
    DomainError(String),
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("grid too coarse for IRF: spacing {spacing} > fwhm/10 = {limit}")]
    GridTooCoarse { spacing: f64, limit: f64 },
    #[error("curves have disjoint support over requested window")]
    DisjointSupport,
    #[error("unit parse error: {0}")]
    UnitParse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("file format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CoemitError>;
