use std::path::PathBuf;

use thiserror::Error;

use crate::types::AdvisorId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("advisor {0} is not covered by the trust vector")]
    UnknownAdvisor(AdvisorId),
    #[error("answer set is empty")]
    EmptyAnswerSet,
    #[error("advisor {0} appears in both the positive and the negative answer set")]
    OverlappingAnswers(AdvisorId),
    #[error("confidence {0} is outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("cannot select {k} advisors from a pool of {pool}")]
    PoolTooSmall { k: usize, pool: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("cell {cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
