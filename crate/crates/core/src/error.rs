//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is out of its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix touched or left the open box `|M_ij| < alpha` where the
    /// log-barrier is defined.
    #[error("infeasible point: |M[{row},{col}]| = {value} >= alpha = {alpha}")]
    InfeasiblePoint {
        row: usize,
        col: usize,
        value: f64,
        alpha: f64,
    },

    /// Backtracking reduced the step below the floor without finding an
    /// acceptable feasible point. Carries the last feasible iterate so the
    /// caller can keep it.
    #[error("line search stalled at lambda = {lambda} after {iterations} iterations")]
    LineSearchStall {
        lambda: f64,
        iterations: usize,
        last: Box<crate::objective::FactorPair>,
    },

    /// Every cross-validation fold was unusable (empty holdout or empty
    /// training set).
    #[error("cross-validation degenerate: {0}; try fewer folds")]
    CvDegenerate(String),

    /// The requested bound is undefined for the supplied constants.
    #[error("bound undefined: {0}")]
    BoundUndefined(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
