use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library. Messages are prefixed with the module that
/// produced them so the CLI can surface them unchanged.
#[derive(Debug, Error)]
pub enum Error {
    #[error("palette: {0}")]
    Palette(String),

    #[error("stimulus: {0}")]
    Stimulus(String),

    #[error("render: {0}")]
    Render(String),

    #[error("prompts: {0}")]
    Prompt(String),

    #[error("probe: {0}")]
    Probe(String),

    #[error("activation: {0}")]
    Activation(String),

    #[error("exchange: {path}: {msg}")]
    Exchange { path: PathBuf, msg: String },

    #[error("report: {0}")]
    Report(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn exchange(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Exchange {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
