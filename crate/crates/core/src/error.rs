use thiserror::Error;

use crate::fnspace::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("player {player}: feasible set is empty ({detail})")]
    Infeasible { player: usize, detail: String },

    #[error("player {player}: inner solver stalled after {iterations} iterations (certified gap {gap:.3e})")]
    Convergence {
        player: usize,
        iterations: usize,
        gap: f64,
        best: Box<Trajectory>,
    },

    #[error("membership violated for {constraint}: excess {excess:.3e}")]
    Membership { constraint: String, excess: f64 },

    #[error("model validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("search space of {size} profiles exceeds the oracle budget of {budget}")]
    OracleBudget { size: u128, budget: u128 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
