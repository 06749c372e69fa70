use thiserror::Error;

use crate::pipeline::AssumptionCheck;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed instance: {0}")]
    Json(#[from] serde_json::Error),

    #[error("term {term}: {msg}")]
    Term { term: usize, msg: String },

    #[error("invalid rational {0:?}")]
    BadRational(String),

    #[error("variable index {index} out of range for {nvars} variables")]
    IndexOutOfRange { index: usize, nvars: usize },

    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree {got} exceeds the maximum {max} allowed here")]
    DegreeTooHigh { max: u32, got: u32 },

    #[error("{what}: {actual} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        actual: usize,
        cap: usize,
    },

    #[error("node set {0:?} does not induce a connected subgraph")]
    NotConnected(Vec<usize>),

    #[error("node {0} is not part of the graph")]
    UnknownNode(usize),

    #[error("invalid tree decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("missing table entry {0}")]
    MissingEntry(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("structural assumptions violated")]
    AssumptionViolated(Box<AssumptionCheck>),

    #[error("block {component:?}: {source}")]
    Block {
        component: Vec<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("internal error: {0}")]
    Internal(String),
}
