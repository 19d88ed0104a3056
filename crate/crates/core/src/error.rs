use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by dataset handling and the modelling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dangling references: {}", .ids.join(", "))]
    Dangling { ids: Vec<String> },

    #[error("invalid badge level link: {0}")]
    LevelLink(String),

    #[error("unknown user: {0}")]
    UnknownUser(String),

    #[error("unknown badge: {0}")]
    UnknownBadge(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("requested {requested} negative pairs but only {available} absent pairs exist")]
    InsufficientAbsentPairs { requested: usize, available: usize },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("rule mining inconsistency: pattern {0} has no frequent prefix")]
    MissingPrefix(String),

    #[error(
        "{family} fit did not converge after {iterations} iterations (best objective {objective})"
    )]
    FitNotConverged {
        family: String,
        iterations: usize,
        objective: f64,
        omega: Vec<f64>,
    },

    #[error("empty candidate grid")]
    EmptyGrid,

    #[error("empty score set: {0}")]
    EmptyScores(&'static str),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
