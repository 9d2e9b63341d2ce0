use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rejection sampling efficiency {efficiency:.2e} is below the 1e-3 floor")]
    RejectionEfficiency { efficiency: f64 },

    #[error("shape has zero estimated measure after {samples} samples")]
    ZeroMeasure { samples: usize },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("subset {index} is not inside B(x_j, c r_j) with c = {c}; double the ball radii")]
    SeparationViolated { index: usize, c: f64 },

    #[error("bounded flags are not monotone in t after smoothing (t near {t:.4}); increase the sample budget")]
    NonMonotoneBound { t: f64 },

    #[error("grid too large: {cells} cells exceeds the cap of {cap}")]
    GridTooLarge { cells: u64, cap: u64 },

    #[error("containment check failed: {0}")]
    Containment(String),

    #[error("empty selection")]
    EmptySelection,

    #[error("mixed shape kinds: {0}")]
    MixedShapes(String),

    #[error("empty intersection at generation {0}")]
    EmptyIntersection(usize),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input, as opposed to estimator or
    /// budget failures at run time.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidShape(_)
                | Error::InvalidParameter(_)
                | Error::MixedShapes(_)
                | Error::Config(_)
                | Error::Containment(_)
                | Error::SeparationViolated { .. }
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
