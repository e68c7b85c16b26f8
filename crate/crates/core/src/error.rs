use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("line {line}: rating not in score set: {value}")]
    RatingNotInScoreSet { line: usize, value: String },

    #[error("line {line}: duplicate rating for user {user:?}, item {item:?}")]
    DuplicateRating {
        line: usize,
        user: String,
        item: String,
    },

    #[error("line {line}: unknown {kind} id {id:?}")]
    UnknownId {
        line: usize,
        kind: &'static str,
        id: String,
    },

    #[error("invalid score set: {0}")]
    InvalidScoreSet(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite factor at iteration {iteration}, score index {score}")]
    NonFinite { iteration: usize, score: usize },

    #[error("training diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("every prediction abstained")]
    AllAbstained,

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numeric failure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NonFinite { .. } | Error::Divergence { .. } | Error::Io(_)
        )
    }
}
