use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("document `{0}` has no token length")]
    MissingTokenLength(String),

    #[error("document `{0}` is nonempty but has token length 0")]
    ZeroTokenLength(String),

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("document `{0}` has no repository path")]
    MissingPath(String),

    #[error("document `{0}` has no domain tag")]
    MissingDomain(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("root document `{0}` is already consumed")]
    RootConsumed(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid binary format: {0}")]
    Format(String),

    #[error("non-finite value in {what} at record {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("{0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
