use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Schema violation; `pointer` is a JSON pointer into the problem file.
    #[error("parse error at {pointer}: {message}")]
    Parse { pointer: String, message: String },
    #[error("validation error in {object}: {message}")]
    Validation { object: String, message: String },
    #[error("{0}")]
    Core(#[from] rno_core::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    /// 1 for parse, validation and I/O failures, 2 for solver failures,
    /// 3 when a guard or hypothesis check refuses the request.
    pub fn exit_code(&self) -> i32 {
        use rno_core::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                E::SolverError { .. } | E::InvalidSolution(_) => 2,
                E::TooLarge(_) | E::Vacuous(_) | E::HypothesisViolated(_) | E::ConditionNotMet(_) | E::NotFreeComponent(_) => 3,
                _ => 1,
            },
        }
    }

    pub fn validation(object: &str, e: impl std::fmt::Display) -> Self {
        CliError::Validation {
            object: object.to_string(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
