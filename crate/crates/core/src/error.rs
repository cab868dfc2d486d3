use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("degenerate Gold sequence seed {0:#x}")]
    DegenerateSeed(u32),

    #[error("no detection: range profile for gNB {transmitter} / UE {receiver} is identically zero")]
    NoDetection { transmitter: usize, receiver: usize },

    #[error("underdetermined: {measurements} measurements for 2 unknowns (need at least 3)")]
    Underdetermined { measurements: usize },

    #[error("insufficient geometry: {0}")]
    InsufficientGeometry(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from invalid user configuration rather than a
    /// failure while running.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::DegenerateSeed(_)
                | Error::Underdetermined { .. }
                | Error::InsufficientGeometry(_)
                | Error::Toml(_)
        )
    }
}
