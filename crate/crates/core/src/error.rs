use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("covariance is not a physical state: smallest symplectic eigenvalue {0} < 1/2")]
    Unphysical(f64),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("invalid probe: {0}")]
    InvalidProbe(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("quadrature oracle not applicable: {0}")]
    OracleInapplicable(String),

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    #[error("too few samples: need at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("degenerate kernel bandwidth")]
    DegenerateBandwidth,

    #[error("limit convergence failure: max deviation {0:e}")]
    ConvergenceFailure(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
