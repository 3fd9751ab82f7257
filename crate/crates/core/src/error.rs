use thiserror::Error;

/// Errors produced by the numeric kernels.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A denominator parameter of a hypergeometric series is zero or a negative integer.
    #[error("invalid lower parameter {param} at position {index}: zero or negative integer")]
    InvalidLowerParameter { index: usize, param: String },

    /// A terminating evaluation was requested for a series without a non-positive integer numerator parameter.
    #[error("series does not terminate: no upper parameter is a non-positive integer")]
    NotTerminating,

    #[error("series did not converge within {max_terms} terms")]
    NonConvergent { max_terms: usize },

    /// The structure polynomial violates `a_{r-1} * b_d != 0`.
    #[error("degenerate structure polynomial: {0}")]
    DegenerateQ(String),

    /// An adaptive truncation never met its stability rule.
    #[error("computation did not stabilize: {0}")]
    NonStabilized(String),
}

pub type Result<T> = std::result::Result<T, Error>;
