use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum KgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient evaluation failed ({what}) at point {point:?}")]
    Evaluation { what: String, point: Vec<f64> },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("trajectory blew up (non-finite state) at step {step}")]
    NonFiniteState { step: usize },

    #[error("eigensolver failed: {0}")]
    Solver(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("experiment stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<KgError>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl KgError {
    pub fn at_stage(self, stage: &'static str) -> Self {
        KgError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, KgError>;
