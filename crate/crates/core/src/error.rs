use thiserror::Error;

use crate::model::Finding;

/// Errors raised while reading or constructing a game.
#[derive(Debug, Error)]
pub enum GameError {
    #[error("cannot read game file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed game document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    Dimension {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("game violates model assumptions: {}", summarize(.0))]
    Validation(Vec<Finding>),
    #[error("leader index {index} out of range (game has {count} leaders)")]
    LeaderIndex { index: usize, count: usize },
}

fn summarize(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Failures of the numerical solvers that cannot be reported as plain
/// non-convergence.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("non-finite value encountered at iteration {iteration}: {what}")]
    NonFinite { iteration: usize, what: &'static str },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}

/// Failures of the verification oracles.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("leader {leader} has an empty strategy set")]
    Infeasible { leader: usize },
    #[error("leader {leader} has {count} inequality constraints, too many for exhaustive enumeration")]
    TooManyConstraints { leader: usize, count: usize },
    #[error("candidate has length {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Game(#[from] GameError),
}
