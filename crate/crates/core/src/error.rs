use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A law, scheme or experiment parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Config { name: String, reason: String },

    /// A config file line that names an unknown key or an invalid value.
    #[error("config line {line}, key `{key}`: {reason}")]
    ConfigLine {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("config is missing required key `{0}`")]
    MissingKey(String),

    #[error("level {0} not in fixed scheme")]
    LevelNotInScheme(i64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} {index} out of range (available: {available})")]
    Range {
        what: &'static str,
        index: u64,
        available: u64,
    },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("gamma undefined for this law: {0}")]
    GammaUndefined(String),

    #[error("infinite variance regime; use quantile spread ({0})")]
    InfiniteVariance(String),

    #[error("limit degenerate; x-target is 0 ({0})")]
    DegenerateLimit(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error comes from a bad configuration rather than the run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::ConfigLine { .. } | Error::MissingKey(_)
        )
    }

    pub(crate) fn config(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
