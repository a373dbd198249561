//! Two-stage attribute-value extraction from product titles.
//!
//! The pipeline pairs a marker-augmented generative attribute proposer with a
//! per-attribute YES/NO token classifier, trained on partially-labeled catalogs.
//! Single-stage baselines (a seq2seq emitting `attr:value` strings and a
//! closed-set per-token tagger), value pruning, dataset bootstrapping and an
//! evaluation harness (set metrics, PR curves via a rescorer, latency) are
//! included, together with a synthetic catalog generator that simulates the
//! partial-label regime with a hidden full gold standard.

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod models;
pub mod numerics;
pub mod pipeline;
pub mod text;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum GentocError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("{0}")]
    InvalidInput(String),
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error("dataset error at line {line}: {detail}")]
    DatasetLine { line: usize, detail: String },
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GentocError>;
