use std::path::PathBuf;

/// Errors surfaced by the digest pipeline.
///
/// Per-page fetch and parse problems never appear here; they degrade to
/// skipped rows instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed result list: {0}")]
    Schema(String),

    #[error("duplicate rank {0} in result list")]
    DupRank(u32),

    #[error("result list query is empty")]
    EmptyQuery,

    #[error("page for rank {0} was not fetched")]
    NotOk(u32),

    #[error("profile store {path} is corrupt: {reason}")]
    StoreCorrupt { path: PathBuf, reason: String },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("template contains no {{{{SEGMENT}}}} token")]
    NoTokens,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by bad input content rather than the environment.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
