use thiserror::Error;

/// Errors produced by the bound computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} is outside the finite domain of the conjugate")]
    DomainViolation(f64),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("no optimizing pair exists: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations (mu = {mu}, t = {t})")]
    NonConvergence { iterations: usize, mu: f64, t: f64 },

    #[error("worst-case density failed its normalization check: {0}")]
    Normalization(String),

    #[error("bound ordering violated: {0}")]
    OrderingViolation(String),

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("line {line}: date {date} does not follow the previous date {previous}")]
    NonMonotoneDate {
        line: u64,
        date: String,
        previous: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
