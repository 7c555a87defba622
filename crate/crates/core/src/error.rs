use thiserror::Error;

/// Errors raised by the model and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{stage} did not converge: {detail}")]
    Convergence { stage: &'static str, detail: String },

    #[error("surrogate subproblem infeasible at slot {slot}: {detail}")]
    InfeasibleSurrogate { slot: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn convergence(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::Convergence {
            stage,
            detail: detail.into(),
        }
    }
}
