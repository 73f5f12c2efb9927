use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}: no trajectories found")]
    EmptyInput(PathBuf),

    #[error("trajectory {0} has waypoints without timestamps")]
    MissingTimestamps(String),

    #[error("segment endpoints coincide")]
    DegenerateSegment,

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("landmark set is empty")]
    EmptyLandmarks,

    #[error("expected two classes, found {0}")]
    NotBinary(usize),

    #[error("class {0} has no training trajectories")]
    EmptyClass(u32),

    #[error("classifier `{0}` does not expose decision scores")]
    ScoresUnavailable(String),

    #[error("feature kinds {0:?} and {1:?} cannot be combined")]
    IncompatibleFeatures(crate::featurize::FeatureKind, crate::featurize::FeatureKind),

    #[error("no training split containing every class after {0} attempts")]
    SplitFailed(usize),

    #[error("invalid experiment spec field `{field}`: {message}")]
    Spec { field: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    pub(crate) fn spec(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Spec {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by an invalid configuration rather than by the data.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Spec { .. } | Error::InvalidParameter { .. } | Error::Json(_)
        )
    }
}
