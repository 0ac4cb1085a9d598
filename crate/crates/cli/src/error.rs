use std::fmt;
use std::process::ExitCode;

use atd_core::admm::AdmmError;
use atd_core::eval::EvalError;
use atd_core::problem::ProblemError;
use atd_core::TensorError;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, config or problem.
    Validation(String),
    Diverged(String),
    Io(String),
    /// The solver stopped at its iteration cap; outputs were written.
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::NotConverged(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::Io(_) => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Diverged(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::NotConverged(m) => write!(f, "not converged: {m}"),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn io_err(context: impl fmt::Display, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{context}: {e}"))
}

pub fn tensor_err(context: impl fmt::Display, e: TensorError) -> CliError {
    match e {
        TensorError::ShapeMismatch { .. } | TensorError::InvalidModes { .. } | TensorError::Unsupported(_) => {
            CliError::Validation(format!("{context}: {e}"))
        }
        _ => io_err(context, e),
    }
}

impl From<AdmmError> for CliError {
    fn from(e: AdmmError) -> Self {
        match e {
            AdmmError::Invalid(_) | AdmmError::Setup(_) => CliError::Validation(e.to_string()),
            AdmmError::Diverged { .. } | AdmmError::Penalty { .. } => CliError::Diverged(e.to_string()),
        }
    }
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        match e {
            ProblemError::Solver(s) => s.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Problem { source, .. } => source.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}
