use thiserror::Error;

use crate::engine::RunAbort;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("agents {i} and {j} occupy the same position; pair force direction is undefined")]
    CoincidentAgents { i: usize, j: usize },

    #[error("state diverged at t = {time} (agent {agent})")]
    Diverged { time: f64, agent: usize },

    #[error("malformed state: {0}")]
    MalformedState(String),

    #[error("run aborted at t = {}: {}", .0.time, .0.reason)]
    Aborted(Box<RunAbort>),

    #[error("theory not applicable: {0}")]
    NotApplicable(String),

    #[error("derivative undefined at s = {s}")]
    UndefinedDerivative { s: f64 },

    #[error("empty record")]
    EmptyRecord,

    #[error("incomplete grid: {0}")]
    IncompleteGrid(String),

    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
