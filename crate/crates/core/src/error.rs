//! Error type shared across the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("denominator is zero")]
    ZeroDenominator,

    #[error("operation undefined for zero: {0}")]
    ZeroOperand(&'static str),

    #[error("set contains zero, which {0} rejects")]
    ZeroInSet(&'static str),

    #[error("set contains a non-positive element, which {0} rejects")]
    NonPositiveElement(&'static str),

    #[error("empty set rejected by {0}")]
    EmptySet(&'static str),

    #[error("enumeration budget exceeded: required {required}, budget {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("lattice dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("edge ({a_index}, {b_index}) references a missing vertex")]
    InvalidEdge { a_index: u32, b_index: u32 },

    #[error("coprimality certificate violated by x={x}, x'={x_prime}, y={y}")]
    CoprimalityViolation {
        x: String,
        x_prime: String,
        y: String,
    },

    #[error("fiber products are not disjoint: {value} produced twice")]
    DisjointnessViolation { value: String },

    #[error("regularization stage '{stage}' emptied the graph at threshold {threshold}")]
    StageEmpty {
        stage: &'static str,
        threshold: String,
    },

    #[error("prime factor exceeds the supported 64-bit range")]
    PrimeFactorTooLarge,

    #[error("could not draw enough distinct values within the requested bounds")]
    NotEnoughDistinct,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
