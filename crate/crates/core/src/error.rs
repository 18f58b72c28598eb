use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("state at site {site} is off the boundary: ({u}, {v})")]
    OffBoundary { site: usize, u: f64, v: f64 },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("the law is atomic here and has no density")]
    Atomic,

    #[error("point {0} lies on the pole of the jump density")]
    Pole(f64),

    #[error("root not bracketed: {0}")]
    NotBracketed(String),

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {err:e})")]
    Quadrature { a: f64, b: f64, err: f64 },

    #[error("refused: {0}")]
    Refused(String),

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from user input rather than a failed run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::UnknownExperiment(_) | Error::InvalidParameter { .. } | Error::SizeMismatch { .. }
        )
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { key: key.into(), reason: reason.into() }
    }
}
