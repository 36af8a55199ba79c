use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in input row {row}")]
    NonFinite { row: usize },

    #[error("integration blew up; last finite state at t = {last_valid_time}")]
    Blowup { last_valid_time: f64 },

    #[error("time grid is not uniform (step {index} differs from the first step)")]
    NonUniformGrid { index: usize },

    #[error("region `{region}` has {samples} samples but needs at least {required}")]
    Underdetermined {
        region: String,
        samples: usize,
        required: usize,
    },

    #[error("trimmed fit needs h > p; got h = {h}, p = {p}")]
    TrimBudget { h: usize, p: usize },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
