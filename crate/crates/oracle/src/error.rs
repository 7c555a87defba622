use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },
    #[error("no strictly feasible starting point: {0}")]
    InfeasibleStart(String),
    #[error("invalid oracle configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, OracleError>;
