use thiserror::Error;

use crate::monomial::Case;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("case {0} exceeds the configured slot limit of {1}")]
    ResourceLimit(Case, usize),

    #[error("no table for case {0}")]
    MissingCase(Case),

    #[error("invariant {0} is not in its case table")]
    UnknownInvariant(String),

    #[error("product monomials are not indexed")]
    ProductNotIndexed,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("inconsistent relation: {0}")]
    Inconsistent(String),

    #[error("database error: {0}")]
    Database(String),

    #[error("insufficient jet depth: need {needed}, have {have}")]
    JetDepth { needed: usize, have: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
