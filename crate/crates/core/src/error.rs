use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("interval mismatch: [{a0}, {af}] vs [{b0}, {bf}]")]
    IntervalMismatch { a0: f64, af: f64, b0: f64, bf: f64 },

    #[error("invalid scenario configuration: {0}")]
    Config(String),

    /// The objective or a constraint was not finite where it had to be.
    #[error("non-finite {what} at the initial guess")]
    NonFinite { what: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
