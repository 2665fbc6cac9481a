//! Dataset translation jobs.
//!
//! Every job reduces its input to an ordered list of translation units,
//! packs them greedily into batches of the backend's maximum size, runs the
//! batches (checkpointing after each one) and reassembles the results in
//! input order. Per-example failures become discards; only backend failures
//! that survive retries abort a job.
//!
//! * translate-train: [`translate_qa_dataset`], [`translate_nli_dataset`],
//!   [`translate_collection`].
//! * translate-infer for ranking: [`run_strategy1`] translates the query set
//!   up front; [`run_strategy2`] translates one query together with its
//!   top-k retrieved passages.

mod engine;
mod nli;
mod qa;
mod ranking;

pub use engine::{Checkpoint, PartialBatch};
pub use nli::translate_nli_dataset;
pub use qa::{translate_qa_dataset, QaMode, QaOutput, QaSettings};
pub use ranking::{
    run_strategy1, run_strategy2, run_strategy2_many, translate_collection, translate_queries, Bundle,
    BundlePassage,
};

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, MeterSnapshot};
use crate::formats::FormatError;
use crate::spanmark::{MarkError, RecoverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    MissingStartDelimiter,
    MissingEndDelimiter,
    OutOfOrderDelimiters,
    DuplicateDelimiters,
    EmptyAnswer,
    DelimiterCollision,
    InvalidSpan,
    LengthMismatch,
}

impl From<RecoverError> for DiscardReason {
    fn from(e: RecoverError) -> Self {
        match e {
            RecoverError::MissingStartDelimiter => DiscardReason::MissingStartDelimiter,
            RecoverError::MissingEndDelimiter => DiscardReason::MissingEndDelimiter,
            RecoverError::DuplicateDelimiters => DiscardReason::DuplicateDelimiters,
            RecoverError::OutOfOrderDelimiters => DiscardReason::OutOfOrderDelimiters,
            RecoverError::EmptyAnswer => DiscardReason::EmptyAnswer,
        }
    }
}

impl From<MarkError> for DiscardReason {
    fn from(e: MarkError) -> Self {
        match e {
            MarkError::InvalidSpan(_) => DiscardReason::InvalidSpan,
            MarkError::DelimiterCollision => DiscardReason::DelimiterCollision,
        }
    }
}

impl fmt::Display for DiscardReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

/// Examples in, examples kept, and why the rest were dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardReport {
    pub total_examples: usize,
    pub kept: usize,
    pub discarded_by_reason: BTreeMap<DiscardReason, usize>,
    /// Characters billed for examples that were then discarded.
    pub wasted_characters: u64,
}

impl DiscardReport {
    pub fn new(total_examples: usize) -> Self {
        Self {
            total_examples,
            ..Default::default()
        }
    }

    pub fn keep(&mut self) {
        self.kept += 1;
    }

    pub fn discard(&mut self, reason: DiscardReason, billed_characters: u64) {
        *self.discarded_by_reason.entry(reason).or_insert(0) += 1;
        self.wasted_characters += billed_characters;
    }

    pub fn discarded(&self) -> usize {
        self.discarded_by_reason.values().sum()
    }

    pub fn discard_rate(&self) -> f64 {
        match self.total_examples {
            0 => 0.0,
            n => self.discarded() as f64 / n as f64,
        }
    }

    /// `kept + discarded == total`.
    pub fn is_balanced(&self) -> bool {
        self.kept + self.discarded() == self.total_examples
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Checkpoint file, rewritten after every batch. Per-batch outputs go to
    /// `<checkpoint>.partial.jsonl`.
    pub checkpoint: Option<PathBuf>,
    /// Continue from an existing checkpoint instead of starting over.
    pub resume: bool,
    /// Stop with [`PipelineError::Interrupted`] once this many batches are
    /// committed.
    pub stop_after_batches: Option<usize>,
    /// Opaque job description stored in the checkpoint.
    pub job: Option<serde_json::Value>,
}

/// Output of a translation job.
#[derive(Debug, Clone)]
pub struct Translated<T> {
    pub output: T,
    pub report: DiscardReport,
    /// Job-level meter; on resume it includes the batches from earlier runs.
    pub meter: MeterSnapshot,
    /// Characters the pipeline sent for translation, counted independently
    /// of the meter.
    pub emitted_characters: u64,
    pub batches: usize,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("backend failed after {completed_batches} committed batches: {source}")]
    Backend {
        source: BackendError,
        completed_batches: usize,
        meter: MeterSnapshot,
    },
    #[error("stopped after {completed_batches} of {total_batches} batches")]
    Interrupted {
        completed_batches: usize,
        total_batches: usize,
        meter: MeterSnapshot,
    },
    #[error("checkpoint belongs to a different job (expected {expected}, found {found})")]
    StaleCheckpoint { expected: String, found: String },
    #[error("unreadable checkpoint: {0}")]
    Checkpoint(String),
    #[error("query {0:?} has no run entries or no text")]
    UnknownQuery(String),
    #[error("passage {0:?} is ranked but missing from the collection")]
    MissingPassageId(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Meter of the committed batches, when the job got that far.
    pub fn meter(&self) -> Option<&MeterSnapshot> {
        match self {
            PipelineError::Backend { meter, .. } | PipelineError::Interrupted { meter, .. } => Some(meter),
            _ => None,
        }
    }
}
