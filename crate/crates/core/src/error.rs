//! Crate-wide error type.

use crate::search::SearchHistory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Shape disagreement between two operands.
    #[error("dimension mismatch in {op}: {left} vs {right}")]
    Dimension {
        op: &'static str,
        left: String,
        right: String,
    },

    /// A NaN or infinity showed up where only finite values are allowed.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Caller violated a precondition (empty dataset, untrained model, ...).
    #[error("{0}")]
    Usage(String),

    /// Token outside the sequence alphabet.
    #[error("unknown token id {id} (alphabet size {alphabet})")]
    UnknownToken { id: usize, alphabet: usize },

    /// A token sequence that does not parse back into a cell graph.
    #[error("decode error at token {index}: {reason}")]
    Decode { index: usize, reason: String },

    /// Tabular benchmark file rejected; every offending row is listed.
    #[error("benchmark load failed with {n} problem(s): {first}", n = problems.len(), first = problems.first().map(String::as_str).unwrap_or(""))]
    TabularLoad { problems: Vec<String> },

    /// Tabular lookup miss.
    #[error("architecture {hash} not present in the benchmark")]
    UnknownArchitecture { hash: String },

    /// The evaluator cannot answer any more unique queries.
    #[error("query budget exhausted after {evaluated} evaluations")]
    BudgetExhausted {
        evaluated: usize,
        partial: Box<SearchHistory>,
    },

    /// Metric undefined for the given input (e.g. all-zero attention map).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Bad experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
