use thiserror::Error;

/// Errors raised by the inference toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("degenerate weight set")]
    DegenerateWeights,

    #[error("information matrix indefinite")]
    IndefiniteInformation,

    #[error("non-finite log-likelihood at {0:?}")]
    NonFiniteLoglik(Vec<f64>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("value outside support: {0}")]
    OutsideSupport(String),

    #[error("negative density {0:e}")]
    NegativeDensity(f64),

    #[error("all {0} draws were flagged as non-converged")]
    AllDrawsFlagged(usize),

    #[error("improper prior cannot be sampled")]
    ImproperPrior,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
