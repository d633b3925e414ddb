use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("margin mismatch: {0}")]
    MarginMismatch(String),

    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),

    /// A right-hand side of the plane-sum encoding came out negative, so the
    /// polytope has no point inside the coordinate box.
    #[error("infeasible right-hand side: plane {plane} has sum {value}")]
    InfeasibleRhs { plane: usize, value: i64 },

    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("illegal move: {0}")]
    IllegalMove(String),

    #[error("projection infeasible: {0}")]
    ProjectionInfeasible(String),

    /// A search or reduction hit its configured cap before finishing.
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
