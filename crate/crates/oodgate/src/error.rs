use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] oodgate_core::Error),

    /// Malformed binary file; `offset` is the byte where decoding failed.
    #[error("{}: format error at byte {offset}: {message}", path.display())]
    Format {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    /// Malformed text input (JSON, JSON lines, CSV).
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("duplicate image id `{0}` in manifest")]
    DuplicateId(String),

    #[error("missing referenced files: {}", format_missing(.0))]
    MissingFiles(Vec<(String, PathBuf)>),

    #[error("configuration: {0}")]
    Config(String),

    #[error("no samples: {0}")]
    NoSamples(String),
}

fn format_missing(items: &[(String, PathBuf)]) -> String {
    items
        .iter()
        .map(|(id, p)| format!("{id} -> {}", p.display()))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 1 usage/config, 2 data/format, 3 empty result.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Core(oodgate_core::Error::Weights(_))
            | Error::Core(oodgate_core::Error::InvalidThreshold(_))
            | Error::Core(oodgate_core::Error::InvalidK(_)) => 1,
            Error::NoSamples(_) | Error::Core(oodgate_core::Error::NoSamples) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
