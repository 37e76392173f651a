use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {pivot:e} at row {row} is below tolerance {tolerance:e}")]
    NotPositiveDefinite {
        row: usize,
        pivot: f64,
        tolerance: f64,
    },

    #[error("gaussian mixture has no components")]
    EmptyMixture,

    #[error("mode atlas is empty")]
    EmptyAtlas,

    #[error(
        "optimizer did not converge within {iterations} iterations (gradient norm {grad_norm:e})"
    )]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("critical point at {location:?} is not a minimum of the potential")]
    NotAMinimum { location: Vec<f64> },

    #[error("grid holds only {mass} of the kernel density mass (need at least 0.999)")]
    GridTooNarrow { mass: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: `{field}` {message}")]
    InvalidConfig { field: String, message: String },

    #[error("unknown target `{0}`")]
    UnknownTarget(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
