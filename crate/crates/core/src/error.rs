use thiserror::Error;

/// Errors raised across the simulator and the verification passes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} values but the grid has {expected} cells")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value {value} at cell {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("field must be strictly positive, found {value} at cell {index}")]
    NonpositiveField { index: usize, value: f64 },

    #[error("field must be nonnegative, found {value} at cell {index}")]
    NegativeField { index: usize, value: f64 },

    #[error("positivity violation in {field} at cell {index}: {value}")]
    PositivityViolation {
        field: &'static str,
        index: usize,
        value: f64,
    },

    #[error("step collapse: stable step {dt:e} is below dt_min {dt_min:e}")]
    StepCollapse { dt: f64, dt_min: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("bad scenario: {0}")]
    BadScenario(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
