use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    /// Some quantile argument reached 1, so the rule is undefined for these classes.
    #[error("inadmissible class distribution: classes {classes:?} have margins {margins:?} (must be < 1)")]
    Inadmissible { classes: Vec<String>, margins: Vec<f64> },

    /// The budgets leave no level-alpha design; `gap` is `(1 - alpha) - sum(b)`.
    #[error("infeasible design: upper bounds fall short of 1 - alpha by {gap:.6e}")]
    Infeasible { gap: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("degenerate scale estimate for class {class:?}")]
    DegenerateScale { class: String },

    #[error("insufficient data for class {class:?}: {count} observation(s), need at least 2")]
    InsufficientData { class: String, count: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("unknown class label(s): {0:?}")]
    UnknownClass(Vec<String>),

    #[error("ground truth missing from the sample")]
    MissingGroundTruth,

    #[error("too many rejected bootstrap draws: {rejected} of {attempted} (last: {last})")]
    ReplicateRejection {
        rejected: usize,
        attempted: usize,
        last: String,
    },
}

impl Error {
    /// True for errors that stem from the data or design rather than bad arguments.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Inadmissible { .. } | Error::Infeasible { .. })
    }
}
