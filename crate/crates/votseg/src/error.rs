use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports. The variants group into the three
/// categories the command line maps onto exit codes (data, config, io).
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation's input contract (shape, range, ordering).
    #[error("input contract violated: {0}")]
    Contract(String),

    /// Bad or inconsistent data: manifests, annotations, feature matrices.
    #[error("data error: {0}")]
    Data(String),

    /// A text file could not be parsed.
    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Audio that is not 16 kHz mono PCM, or similar format problems.
    #[error("format error: {0}")]
    Format(String),

    /// Invalid configuration or hyperparameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// A model file written by an incompatible version.
    #[error("incompatible model file: {0}")]
    Incompatible(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error category, stable across versions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Data,
    Config,
    Io,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Error::Contract(_)
            | Error::Data(_)
            | Error::Parse { .. }
            | Error::Format(_)
            | Error::Incompatible(_) => Category::Data,
            Error::Config(_) => Category::Config,
            Error::Io { .. } => Category::Io,
        }
    }

    /// Process exit code for the command line: 1 data, 2 config, 3 io.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            Category::Data => 1,
            Category::Config => 2,
            Category::Io => 3,
        }
    }
}
