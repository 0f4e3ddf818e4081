use thiserror::Error;

use crate::grid::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid or control program: {0}")]
    Invalid(ValidationReport),

    #[error("singular nodal system: pivot {pivot} has magnitude {magnitude:e}")]
    Singular { pivot: usize, magnitude: f64 },

    #[error(
        "steady-state residual check failed: {check} residual {residual:e} exceeds {tolerance:e}"
    )]
    Inconsistent {
        check: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("closed-form downstream current is singular: denominator {0:e}")]
    ClosedFormSingular(f64),

    #[error("invalid weight task: {0}")]
    InvalidTask(String),

    #[error("compiled program is unusable at node {node}: {reason}")]
    Compile { node: usize, reason: String },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error(
        "decode confidence too low: {quotient} is {residual:.3} away from the nearest integer"
    )]
    DecodeConfidence { quotient: f64, residual: f64 },

    #[error("{context}: {source}")]
    Stage {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("superposition violated for image {image} ({direction}): deviation {deviation:e}")]
    Superposition {
        image: String,
        direction: String,
        deviation: f64,
    },

    #[error("case {image} ({direction}) decoded {decoded}, expected {expected}")]
    Mismatch {
        image: String,
        direction: String,
        decoded: i64,
        expected: i64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid image {0:?}: expected four characters of 0 or 1")]
    Image(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps the error with the name of the stage that produced it.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Stage {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Strips [`Error::Stage`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by the user's input rather than by a failed computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.root(),
            Error::Invalid(_)
                | Error::InvalidTask(_)
                | Error::Compile { .. }
                | Error::Config(_)
                | Error::Image(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}
