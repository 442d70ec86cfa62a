use std::path::PathBuf;

use crate::corpus::Domain;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input data is internally inconsistent (missing or duplicate records, NaN scores, ...).
    #[error("data error: {0}")]
    Data(String),

    #[error("no sentences available for quota'd domain `{0}`")]
    MissingDomain(Domain),

    #[error("input is not valid UTF-8: {0}")]
    Decode(#[from] std::string::FromUtf8Error),

    #[error("provider failure on `{example_id}`: {message}")]
    Provider { example_id: String, message: String },

    #[error("validation failed for `{subject}`: {message}")]
    Validation { subject: String, message: String },

    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),

    #[error("report error: {0}")]
    Report(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
