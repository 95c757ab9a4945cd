use std::path::PathBuf;

use crate::autodiff::AutodiffError;
use crate::geometry::GeometryError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("view synthesis: no target pixel projects inside the source image")]
    EmptyOverlap,
    #[error("{metric}: clean baseline is {clean}, ratio undefined")]
    DivisionGuard { metric: String, clean: f64 },
    #[error("weight file malformed at byte {offset}: {reason}")]
    WeightFormat { offset: usize, reason: String },
    #[error("pose file malformed at line {line}: {reason}")]
    PoseFormat { line: usize, reason: String },
    #[error("image file {}: {reason}", file.display())]
    ImageFormat { file: PathBuf, reason: String },
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("{}: {source}", path.display())]
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

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
