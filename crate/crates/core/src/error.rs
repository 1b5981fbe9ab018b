//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by geometry, sampling, complex construction, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Input points or parameters do not match the manifold model.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A radius or configuration falls outside the regime in which the
    /// geometric guarantees (unique centers, convex balls) hold.
    #[error("out of regime: {0}")]
    OutOfRegime(String),

    /// Antipodal points, ambiguous torus wraps, or other configurations
    /// where the geodesic (and hence the log map) is not unique.
    #[error("degenerate geodesic: {0}")]
    DegenerateGeodesic(String),

    /// A simplicial complex violated a structural precondition.
    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    /// A homology degree was requested beyond the trusted dimension cap.
    #[error("insufficient dimension: {0}")]
    InsufficientDimension(String),

    /// The origin was expected inside the gradient polytope but is not.
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// A per-trial invariant assertion failed; carries diagnostics.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// Config parsing / file IO.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON config.
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code: 1 for invariant/acceptance failures, 2 for
    /// invalid input or regime violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvariantViolation(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
