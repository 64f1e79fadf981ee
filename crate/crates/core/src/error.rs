use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("amplitude is not normalized (norm = {norm}, tolerance = {tolerance})")]
    NotNormalized { norm: f64, tolerance: f64 },

    #[error("unsupported state kind for this operation: {0}")]
    Unsupported(String),

    #[error("delay {tau} ps lies outside the tabulated span [{lo}, {hi}] ps")]
    OutOfRange { tau: f64, lo: f64, hi: f64 },

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("zero Fisher information at the requested point: {0}")]
    ZeroInformation(String),

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
