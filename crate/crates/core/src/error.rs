use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid subsystem: {0}")]
    InvalidSubsystem(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid solution: {0}")]
    InvalidSolution(String),
    #[error("solver failed: {message} (primal {primal_res:.3e}, dual {dual_res:.3e}, gap {gap:.3e})")]
    SolverError {
        message: String,
        primal_res: f64,
        dual_res: f64,
        gap: f64,
    },
    #[error("transformation condition not met: {0}")]
    ConditionNotMet(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("vacuous: {0}")]
    Vacuous(String),
    #[error("component is not free: {0}")]
    NotFreeComponent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
