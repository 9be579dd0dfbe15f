use thiserror::Error;

/// Errors produced by the allocation toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("allocation has {got} entries but the scenario has {expected} groups")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{method} certificates are not available for {kind} demand; supported families: binomial, normal, poisson")]
    UnsupportedFamily { method: String, kind: String },

    #[error("no fairness floor admits an allocation with Q <= {alpha}")]
    Infeasible { alpha: f64 },

    #[error("bisection did not converge within {steps} steps")]
    NonConvergence { steps: usize },

    #[error("{path}: {message} (line {line}, column {column})")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
