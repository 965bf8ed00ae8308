use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Error categories map one-to-one onto CLI exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation: {0}")]
    Validation(String),

    #[error("index out of range: {0}")]
    Range(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("computation: {0}")]
    Computation(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn fit(msg: impl Into<String>) -> Self {
        Error::Fit(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Machine readable category: `config`, `io`, `data` or `fit`.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Parse { .. } | Error::Validation(_) | Error::Range(_) => "data",
            Error::Fit(_) | Error::Computation(_) => "fit",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "io" => 3,
            "data" => 4,
            _ => 5,
        }
    }
}
