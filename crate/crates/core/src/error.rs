use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A closed form was evaluated outside the regime where its approximations hold.
    #[error("parameter regime violated: {reason}")]
    Regime {
        reason: String,
        /// Smallest holdout size that would restore validity, when one exists.
        min_m_cv: Option<usize>,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("scenario failed: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
