use thiserror::Error;

/// Errors surfaced by configuration validation, input data and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter combination the discretization cannot represent,
    /// e.g. a kernel support not aligned to the mesh.
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid field data, e.g. densities outside [0, 1].
    #[error("data error: {0}")]
    Data(String),

    /// An evaluation point outside a function's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Several validation failures collected from one config file.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
