use std::path::PathBuf;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid wavelength grid: {0}")]
    InvalidGrid(Violation),

    #[error("invalid cube: {}", .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidCube(Vec<Violation>),

    #[error("{axis} index {index} out of bounds (len {len})")]
    OutOfBounds {
        axis: &'static str,
        index: usize,
        len: usize,
    },

    #[error("unmapped class {0}")]
    UnmappedClass(u32),

    #[error("query {query} outside interpolation range [{lo}, {hi}]; extrapolation is not supported")]
    Extrapolation { query: f64, lo: f64, hi: f64 },

    #[error("{method} needs at least {needed} points, got {got}")]
    Arity {
        method: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("length mismatch: {what} (expected {expected}, got {actual})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no common spectral range: {0}")]
    NoCommonRange(String),

    #[error("no band within reach of {target_nm} nm (grid spans {lo}..{hi} nm)")]
    BandNotCovered { target_nm: f64, lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("empty sample set: {0}")]
    EmptySamples(String),

    #[error("malformed {file}: {field}: {reason}")]
    Format {
        file: PathBuf,
        field: &'static str,
        reason: String,
    },

    #[error("dataset {name}: {source}")]
    Dataset {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("pixel (row {row}, col {col}): {source}")]
    Pixel {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, field: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            file: path.into(),
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn in_dataset(self, name: &str) -> Self {
        Error::Dataset {
            name: name.to_string(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::InvalidCube(_) => "invalid_cube",
            Error::OutOfBounds { .. } => "out_of_bounds",
            Error::UnmappedClass(_) => "unmapped_class",
            Error::Extrapolation { .. } => "extrapolation",
            Error::Arity { .. } => "arity",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Shape(_) => "shape_mismatch",
            Error::NoCommonRange(_) => "no_common_range",
            Error::BandNotCovered { .. } => "band_not_covered",
            Error::Config(_) => "config",
            Error::Manifest(_) => "manifest",
            Error::EmptySamples(_) => "empty_samples",
            Error::Format { .. } => "format",
            Error::Dataset { source, .. } | Error::Pixel { source, .. } => source.kind(),
            Error::Io { .. } => "io",
            Error::Internal(_) => "internal",
        }
    }

    /// True for failures caused by the caller's input rather than a bug.
    pub fn is_user_error(&self) -> bool {
        match self {
            Error::Internal(_) => false,
            Error::Dataset { source, .. } | Error::Pixel { source, .. } => source.is_user_error(),
            _ => true,
        }
    }
}
