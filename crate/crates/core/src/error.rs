use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: line {line}: {message}")]
    Validation {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty rating table")]
    EmptyTable,

    #[error("infeasible synthetic dataset: {0}")]
    InfeasibleSpec(String),

    #[error("user {0} has an empty training profile")]
    EmptyProfile(String),

    #[error("epsilon is undefined for user {0}: no data usage")]
    UndefinedEpsilon(String),

    #[error("cannot estimate tau: {0}; pass an explicit tau instead")]
    DegenerateUsage(String),

    #[error("query index {requested} exceeds the {processed} processed queries of user {user}")]
    QueryOutOfRange {
        user: String,
        requested: usize,
        processed: usize,
    },

    #[error("statistic undefined: {0}")]
    Undefined(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("mismatched runs: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
