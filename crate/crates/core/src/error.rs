use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A distribution parameter is outside its admissible range.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An argument violates an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An estimation operation received an empty sample.
    #[error("empty sample")]
    EmptySample,

    /// The requested estimator is undefined for this sample.
    #[error("estimator undefined: {0}")]
    UndefinedEstimator(String),

    /// Input data failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// Vector or matrix dimensions do not conform.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix factorization failed.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// An iterative procedure failed numerically.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for input problems (the CLI exits 1); false for numerical
    /// failures (the CLI exits 2).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Singular(_) | Error::Numerical(_))
    }
}
