use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("crater placement failed: {0}")]
    Placement(String),

    #[error("position ({x:.2}, {y:.2}) is outside the DEM extent")]
    OutOfBounds { x: f64, y: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate particle filter: {0}")]
    DegenerateFilter(String),

    #[error("trajectory planning failed: {0}")]
    Planning(String),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            what,
            reason: reason.into(),
        }
    }
}
