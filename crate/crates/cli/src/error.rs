use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] nilxray::Error),

    /// A core failure at an identified grid cell, point or geodesic.
    #[error("{what}: {source}")]
    At {
        what: String,
        #[source]
        source: nilxray::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },

    /// Output was written, but some directions have no verified flat.
    #[error("no verified flat for {missing} of {total} directions")]
    FlatsNotFound { missing: usize, total: usize },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    /// 0 ok, 2 validation (including I/O and parsing), 3 numeric, 4 flat not found.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) | CliError::At { source: e, .. } => match e {
                nilxray::Error::Numeric(_) => 3,
                nilxray::Error::NotFound(_) => 4,
                _ => 2,
            },
            CliError::FlatsNotFound { .. } => 4,
            _ => 2,
        }
    }

    pub(crate) fn at(what: impl Into<String>) -> impl FnOnce(nilxray::Error) -> Self {
        let what = what.into();
        move |source| CliError::At { what, source }
    }

    pub(crate) fn parse(path: &std::path::Path, msg: impl std::fmt::Display) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        }
    }
}
