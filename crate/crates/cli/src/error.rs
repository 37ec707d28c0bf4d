use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] kpartite::error::Error),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// 0 success, 2 input error, 3 numerical failure, 4 statistical guard.
    pub fn exit_code(&self) -> u8 {
        use kpartite::error::Error as E;
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                E::DimensionMismatch { .. }
                | E::NotSymmetric(_)
                | E::NotPositiveDefinite
                | E::Unphysical(_)
                | E::InvalidBipartition(_)
                | E::InvalidProbe(_)
                | E::InvalidParameter(_) => 2,
                E::NumericalDegeneracy(_)
                | E::NumericalFailure(_)
                | E::OracleInapplicable(_)
                | E::OptimizationFailed(_)
                | E::ConvergenceFailure(_) => 3,
                E::TooFewSamples { .. } | E::DegenerateBandwidth => 4,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
