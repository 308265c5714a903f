use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid modulus {0}: every cyclic factor needs order at least 1")]
    InvalidModulus(i64),

    #[error("group order {order} exceeds the configured ceiling {ceiling}")]
    GroupTooLarge { order: u128, ceiling: u64 },

    #[error("objects live in different groups")]
    GroupMismatch,

    #[error("coordinate vector has length {got}, expected {expected}")]
    RankMismatch { expected: usize, got: usize },

    #[error("{what} needs {size} steps, above the limit {limit}")]
    Infeasible { what: &'static str, size: u128, limit: u128 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A checked bound did not hold. This signals an implementation bug.
    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("no weakly regular radius on grid")]
    NoWeaklyRegularRadius,

    #[error("vector is not in the integer span of the generators")]
    NotInSpan,

    #[error("invalid basis move: {0}")]
    InvalidMove(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
