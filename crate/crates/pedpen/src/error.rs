//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("pedigree parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("pedigree structure unsupported: {0}")]
    UnsupportedStructure(String),

    #[error("pedigree too large for exhaustive enumeration: {members} members (limit {limit})")]
    PedigreeTooLarge { members: usize, limit: usize },

    #[error("no affected individuals with known diagnosis ages; cannot initialize the chain")]
    NoAffected,

    #[error("non-finite log posterior at the current state of chain {chain}: {detail}")]
    NonFiniteLogPosterior { chain: usize, detail: String },

    #[error("{0}")]
    Imputation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejection signal from the quantile-to-Weibull map when the proposed
/// quantile spacing is degenerate. Callers treat it like an out-of-bounds
/// proposal rather than a hard failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegenerateQuantiles;

impl std::fmt::Display for DegenerateQuantiles {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "degenerate quantile spacing")
    }
}

impl std::error::Error for DegenerateQuantiles {}
