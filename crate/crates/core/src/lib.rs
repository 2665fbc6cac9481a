//! Span-preserving dataset translation for cross-lingual transfer, and the
//! cost model for comparing zero-shot, translate-train and translate-infer.
//!
//! * [`formats`]: SQuAD JSON, NLI records, passage-ranking TSV files.
//! * [`spanmark`]: delimiter marking and recovery of QA answer spans.
//! * [`segment`]: lossless sentence splitting.
//! * [`backend`]: batched translation clients with metering and test doubles.
//! * [`pipeline`]: translate-train and translate-infer jobs with checkpoints.
//! * [`costmodel`]: one-time cost, recurring cost and added latency.
//! * [`metrics`]: exact match, token F1, accuracy, MRR@k.
//! * [`job`]: file-driven job configuration behind the `crosslate` CLI.

pub mod backend;
pub mod costmodel;
pub mod formats;
pub mod job;
pub mod metrics;
pub mod pipeline;
pub mod segment;
pub mod spanmark;
pub mod text;
