use thiserror::Error;

/// Errors produced by the possibility algebra, the filter and the fusion rules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("covariance is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid weight {0}: must lie in (0, 1]")]
    InvalidWeight(f64),

    #[error("mixture has no components")]
    EmptyMixture,

    #[error("invalid exponent {0}: must lie in (0, 1]")]
    InvalidExponent(f64),

    #[error("invalid fusion weight omega = {0}")]
    InvalidOmega(f64),

    #[error("fused precision matrix is singular")]
    SingularPrecision,

    #[error("fused weight underflowed to zero")]
    WeightUnderflow,

    #[error("invalid possibility value {name} = {value}")]
    InvalidPossibility { name: &'static str, value: f64 },

    #[error("invalid probability interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("fusion inputs are in total conflict (both normalizer terms vanish)")]
    TotalConflict,

    #[error("no estimate is present")]
    AbsentEstimate,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure in run {run}, step {step}: {source}")]
    Run {
        run: usize,
        step: usize,
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at(self, run: usize, step: usize) -> Self {
        match self {
            e @ Error::Run { .. } => e,
            e => Error::Run {
                run,
                step,
                source: Box::new(e),
            },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
