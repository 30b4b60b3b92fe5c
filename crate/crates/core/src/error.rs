use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid GA parameters: {0}")]
    InvalidParams(String),

    #[error("corrupt chromosome: gene {gene} at position {position} is outside [1, {n_nodes}]")]
    CorruptChromosome {
        position: usize,
        gene: u32,
        n_nodes: usize,
    },

    #[error("search space of {size} assignments exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: f64, limit: u64 },

    #[error("ill-posed calibration: {0}")]
    IllPosed(String),

    #[error("{}line {line}, column {column}: {message}", location_prefix(.path))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config: {field}: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn location_prefix(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!("{}: ", p.display()),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Attaches a file path to a parse error that was raised without one.
    pub(crate) fn with_path(self, file: &std::path::Path) -> Self {
        match self {
            Error::Parse {
                path: None,
                line,
                column,
                message,
            } => Error::Parse {
                path: Some(file.to_path_buf()),
                line,
                column,
                message,
            },
            other => other,
        }
    }
}
