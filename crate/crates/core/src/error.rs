use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed encoding: {0}")]
    MalformedEncoding(String),

    #[error("frame mismatch: expected {expected:?} (height, width), found {found:?}")]
    FrameMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("malformed annotation {record}: {reason}")]
    MalformedAnnotation { record: String, reason: String },

    #[error("referential integrity: {0}")]
    ReferentialIntegrity(String),

    #[error("malformed panoptic map: {0}")]
    MalformedMap(String),

    #[error("error kind `{0}` needs polygon input but only a raster mask is available")]
    MissingPolygon(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("image error in {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
