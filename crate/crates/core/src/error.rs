//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: unsupported image format ({detail})")]
    UnsupportedFormat { path: PathBuf, detail: String },

    #[error("{path}: malformed image ({detail})")]
    MalformedImage { path: PathBuf, detail: String },

    #[error("{path}: image has zero width or height")]
    ZeroSized { path: PathBuf },

    #[error("image must have at least one pixel")]
    EmptyImage,

    #[error("pixel out of declared range: {detail}")]
    PixelOutOfRange { detail: String },

    #[error("image of size {rows}x{cols} is too small to fit; need at least 3x3")]
    TooSmall { rows: usize, cols: usize },

    #[error("dimension mismatch: {detail}")]
    DimensionMismatch { detail: String },

    #[error("expected an image in {expected} scale, got {got}")]
    ScaleMismatch { expected: String, got: String },

    #[error("invalid configuration: {detail}")]
    InvalidConfig { detail: String },

    #[error("singular system: non-positive pivot at row {pivot}")]
    SingularSystem { pivot: usize },

    #[error("degenerate fit: {detail}")]
    DegenerateFit { detail: String },

    #[error("metric undefined: {detail}")]
    UndefinedMetric { detail: String },

    #[error("cannot synthesize scene: {detail}")]
    Synth { detail: String },
}

impl Error {
    pub(crate) fn dim(detail: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            detail: detail.into(),
        }
    }

    pub(crate) fn config(detail: impl Into<String>) -> Self {
        Error::InvalidConfig {
            detail: detail.into(),
        }
    }
}
