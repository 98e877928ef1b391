use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The second-order formulation requires a strictly positive total cross
    /// section at every sample point.
    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    /// CG detected a non-positive curvature direction; the operator is not
    /// SPD within rounding, or truncation destroyed the search direction.
    #[error("cg breakdown: {0}")]
    Breakdown(String),

    #[error("dense solution needs {needed} bytes, cap is {cap}")]
    DenseCap { needed: u64, cap: u64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
