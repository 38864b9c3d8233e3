use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A digit sequence is not a valid expansion (e.g. a terminal symbol
    /// in the middle).
    #[error("malformed expansion: {0}")]
    MalformedExpansion(String),

    /// Input data failed validation (normalization, grid shape, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A rectangle does not belong to a family with a known image.
    #[error("unsupported rectangle shape: {0}")]
    UnsupportedShape(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} > tolerance {tolerance:e}")]
    Quadrature {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI's JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::MalformedExpansion(_) => "malformed_expansion",
            Error::Validation(_) => "validation",
            Error::UnsupportedShape(_) => "unsupported_shape",
            Error::Quadrature { .. } => "quadrature",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_base(m: u32) -> Result<()> {
    if m < 2 {
        return Err(Error::Domain(format!("base m must be >= 2, got {m}")));
    }
    Ok(())
}
