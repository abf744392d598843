use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::report::CheckReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value {value} in coordinate {coord}")]
    NonFinite { coord: usize, value: f64 },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("orbit left the box: coordinate {coord} = {value} outside [{lo}, {hi}]")]
    OutOfBounds {
        coord: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error(
        "no section crossing within horizon {horizon} (recurrence failure or horizon too small)"
    )]
    NoCrossing { horizon: f64 },

    #[error("point {0:?} is not on the section")]
    NotOnSection(Vec<f64>),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownSystem(String),

    #[error("parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    #[error("systems do not match: {0}")]
    Mismatch(String),

    #[error("precondition `{}` failed (max residual {:e})", .0.name, .0.max_residual)]
    Precondition(Box<CheckReport>),

    #[error("config: {0}")]
    Config(String),
}
