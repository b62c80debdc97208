use thiserror::Error;

use crate::argdual::KktResiduals;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("bregman center not interior")]
    NotInterior,

    #[error("point outside the ground set")]
    OutsideGroundSet,

    #[error("subproblem is infeasible")]
    Infeasible,

    #[error("dual iteration exceeded {iterations} steps without reaching tolerance (best residuals: {residuals:?})")]
    ArgdualNotConverged {
        iterations: usize,
        residuals: KktResiduals,
    },

    #[error("dual function infinite at z")]
    DualUnbounded,

    #[error("no valid L found after {tries} backtracking steps (last candidate {last_l:e})")]
    NoValidL { tries: usize, last_l: f64 },

    #[error("step-size recursion produced a non-finite value at iteration {0}")]
    StepRecursion(usize),

    #[error("linear system is singular")]
    Singular,

    #[error("i/o error: {0}")]
    Io(std::io::Error),

    #[error("malformed problem file: {0}")]
    Parse(serde_json::Error),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e)
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
