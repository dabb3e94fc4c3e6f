use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad caller input: empty groups, length mismatches, unknown names.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The CSV header does not carry a column the schema requires.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("encoding error: feature `{feature}` has unmapped value `{value}`")]
    Encoding { feature: String, value: String },

    /// The data cannot support the requested model (no events, one class, ...).
    #[error("model error: {0}")]
    Model(String),

    #[error("no convergence after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    Convergence {
        iterations: usize,
        gradient_norm: f64,
        last_beta: Vec<f64>,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Config(_) => 2,
            Error::Schema(_)
            | Error::Parse { .. }
            | Error::Encoding { .. }
            | Error::Model(_)
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_) => 3,
            Error::Convergence { .. } | Error::Numeric(_) => 4,
        }
    }
}
