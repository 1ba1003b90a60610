use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty taxonomy")]
    EmptyTaxonomy,

    #[error("unknown term: {0}")]
    UnknownTerm(String),

    #[error("pair not found: ({verb}, {role}, {arg})")]
    PairNotFound {
        verb: String,
        role: String,
        arg: String,
    },

    #[error("graph has {size} concepts, brute-force oracle is limited to {limit}")]
    OracleTooLarge { size: usize, limit: usize },

    #[error("cannot swap within a single verb")]
    SingleVerbSwap,

    #[error("length mismatch: {predictions} predictions vs {gold} gold labels")]
    LengthMismatch { predictions: usize, gold: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("lexicon was built from taxonomy {lexicon}, loaded taxonomy is {loaded}")]
    TaxonomyMismatch { lexicon: String, loaded: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
