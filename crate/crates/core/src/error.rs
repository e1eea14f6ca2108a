use thiserror::Error;

/// Errors raised by the engine. `is_resource_exhaustion` distinguishes
/// budget failures (search can neither finish nor prove infeasibility) from
/// validation failures; callers must never conflate the two.
#[derive(Debug, Error)]
pub enum Error {
    /// A document violates its schema. `path` points into the document.
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    /// Input vectors disagree on dimension.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// An enumeration-based operation was called on a real-valued feature.
    #[error("feature '{feature}' is real-valued; enumeration requires a discrete feature")]
    NotDiscrete { feature: String },

    /// An intervention value outside the feature's intervention grid.
    #[error("intervention {value} is not in the intervention grid of feature '{feature}'")]
    InvalidIntervention { feature: String, value: f64 },

    /// An exclusion list entry that cannot have been produced for (j, v).
    #[error("exclusion list entry {index} is inconsistent: {message}")]
    InconsistentExclusion { index: usize, message: String },

    /// Complete search exceeded its node budget before proving a result.
    #[error("search exceeded node budget of {budget} nodes")]
    NodeBudgetExhausted { budget: u64 },

    /// Rejection sampler hit its attempt cap without accepting enough draws.
    #[error("rejection sampling exceeded {attempts} attempts with {accepted} accepted draws")]
    RejectionCapExceeded { attempts: u64, accepted: usize },

    /// Robust-score perturbation enumeration grew past its budget.
    #[error("perturbation enumeration exceeded budget of {budget} vectors")]
    PerturbationBudgetExceeded { budget: u64 },

    /// Sampling requested for a feature with no feasible interventions.
    #[error("feature '{feature}' has an empty intervention set")]
    EmptyInterventionSet { feature: String },

    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),

    #[error("weight function returned a negative or non-finite value {value} for an action")]
    InvalidWeight { value: f64 },

    /// Table classifier queried at a point it does not cover.
    #[error("point is not covered by the table classifier")]
    OffTable,

    /// Catch-all precondition violation with a human-readable reason.
    #[error("{0}")]
    Validation(String),

    #[error("dataset row {row}: {message}")]
    DatasetRow { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed delimited data: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn is_resource_exhaustion(&self) -> bool {
        matches!(
            self,
            Error::NodeBudgetExhausted { .. }
                | Error::RejectionCapExceeded { .. }
                | Error::PerturbationBudgetExceeded { .. }
        )
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
