//! Error type shared by every module of the crate.

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller broke an operation's precondition (shape, symmetry, lengths).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("Clifford system (m={m}, k={k}) is geometrically inadmissible: m2 = {m2} < 1")]
    Inadmissible { m: usize, k: usize, m2: i64 },

    #[error("calibration failed: residual {residual:.3e} above floor {floor:.1e}")]
    Calibration { residual: f64, floor: f64 },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("finite-difference error estimate {estimate:.3e} exceeds {limit:.1e} (step {step:.1e})")]
    Precision { estimate: f64, limit: f64, step: f64 },

    #[error("frame transport rotated by {angle:.3} rad over step {step:.1e}")]
    StepTooLarge { angle: f64, step: f64 },

    #[error("numerical integrity: {0}")]
    Integrity(String),

    #[error("unknown family key `{0}`")]
    UnknownFamily(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
