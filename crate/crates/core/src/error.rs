use thiserror::Error;

/// Errors raised across the library.
///
/// Variants map onto the CLI exit codes: everything here is a domain error
/// (exit 1) except [`Error::Io`] and [`Error::Format`], which the CLI also
/// reports as domain failures because they concern user-provided data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The requested interval belongs to a different asymptotic regime.
    #[error("regime error: {0}")]
    Regime(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("block out of range: {0}")]
    Range(String),

    #[error("estimator kind does not match coupling law: {0}")]
    Mismatch(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable code used by the CLI's JSON error line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Domain(_) => "domain",
            Error::Regime(_) => "regime",
            Error::Estimation(_) => "estimation",
            Error::Range(_) => "range",
            Error::Mismatch(_) => "mismatch",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
