use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("objective matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("objective matrix has {len} entries, expected {expected}")]
    ShapeMismatch { len: usize, expected: usize },

    #[error("index set must not be empty")]
    EmptyIndexSet,

    #[error("coordinate {index} is outside 1..={max}")]
    CoordinateOutOfRange { index: usize, max: usize },

    #[error("variable u{index} fixed to both 0 and 1")]
    ConflictingFix { index: usize },

    #[error("enumeration over {vars} variables exceeds the limit of {limit}")]
    EnumerationLimitExceeded { vars: usize, limit: usize },

    #[error("multiplier {index} has the wrong sign ({value})")]
    SignViolation { index: usize, value: f64 },

    #[error("dual candidate has {got} multipliers, query needs {expected}")]
    DualLength { got: usize, expected: usize },

    #[error("eigensolver did not converge on a {dim}x{dim} matrix")]
    EigenNonConvergence { dim: usize },

    #[error("incumbent is not feasible: {0}")]
    InfeasibleIncumbent(String),

    #[error("contradiction: {0}")]
    Contradiction(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
