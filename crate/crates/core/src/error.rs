use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("not a group: {0}")]
    NotAGroup(String),
    #[error("cannot classify the empty set")]
    EmptySet,
    #[error("operation requires a coset or subgroup input")]
    NotCosetInput,
    #[error("operation requires a subgroup input")]
    NotSubgroup,
    #[error("operation requires an almost-direct product")]
    NotAdpInput,
    #[error("kernel is not a normal subgroup")]
    NotNormal,
    #[error("element {0:?} has more than one constraining group")]
    ContradictoryInstance(String),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("unknown carrier {0:?}")]
    UnknownCarrier(String),
    #[error("arity mismatch in {context}: expected {expected}, got {got}")]
    ArityMismatch {
        context: String,
        expected: usize,
        got: usize,
    },
    #[error("element {0:?} is not bound to the instance")]
    UnknownElement(String),
    #[error("value {value} out of range for group of order {order}")]
    ValueOutOfRange { value: usize, order: usize },
    #[error("search budget exceeded ({0} nodes)")]
    BudgetExceeded(u64),
    #[error("solution cap exceeded ({0})")]
    CapExceeded(usize),
    #[error("relation defined by the formula is empty")]
    EmptyRelation,
    #[error("instance is unsolvable")]
    Unsolvable,
    #[error("the extendable-solution set is empty")]
    EmptyExtendableSet,
    #[error("assignment is not an anomaly")]
    NotAnAnomaly,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("internal invariant violated: {0}")]
    AssertionFailure(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
