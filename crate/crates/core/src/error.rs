use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("fidelity undefined for an identically zero gate map")]
    ZeroGateMap,

    #[error("unknown target gate `{0}`")]
    UnknownTarget(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("continuation failed: {0}")]
    Continuation(String),

    #[error("structural break at delta = {delta:e}: rotation pattern {found:?} differs from {expected:?}")]
    StructuralBreak {
        delta: f64,
        expected: Vec<(usize, usize)>,
        found: Vec<(usize, usize)>,
    },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
