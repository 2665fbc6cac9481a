//! Readers and writers for the dataset layouts the pipelines consume and emit.
//!
//! * [`squad`]: SQuAD v1.1 JSON (extractive QA).
//! * [`nli`]: premise/hypothesis/label records in TSV or JSON-lines, driven by an
//!   [`nli::NliSchema`] descriptor.
//! * [`ranking`]: MS MARCO style `id<TAB>text` collections and query sets, run
//!   files and binary relevance judgments.
//!
//! All text is UTF-8 and answer offsets are counted in characters of the
//! decoded text, never in bytes.

pub mod nli;
pub mod ranking;
pub mod squad;

pub use nli::{
    parse_labels, parse_nli, remap_labels, write_nli, LabelScheme, NliLabel, NliLayout, NliPair, NliSchema,
};
pub use ranking::{
    parse_collection, parse_qrels, parse_queries, parse_run, write_collection, write_qrels,
    write_queries, write_run, PassageCollection, Qrels, QuerySet, RunEntry, RunFile, RunWarning,
};
pub use squad::{
    parse_qa, write_qa, Answer, OffsetPolicy, Provenance, QaDataset, QaExample, QaParse,
    QaParseOptions, Rejection, RejectionReason,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed input: {0}")]
    MalformedSchema(String),

    #[error("input is not valid UTF-8: {0}")]
    Encoding(#[from] std::str::Utf8Error),

    #[error("example {id}: answer {answer:?} not found at character offset {answer_start}")]
    OffsetMismatch {
        id: String,
        answer: String,
        answer_start: usize,
    },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRecord {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("label {0} has no entry in the mapping")]
    UnmappedLabel(NliLabel),

    #[error("query {qid:?}: rank {rank} appears more than once")]
    DuplicateRank { qid: String, rank: u32 },

    #[error("line {line}: invalid rank {value:?}")]
    InvalidRank { line: usize, value: String },

    #[error("field {field:?} cannot be encoded in this layout: {reason}")]
    Unencodable { field: String, reason: &'static str },
}

/// Splits input into LF-terminated lines, dropping a final empty line.
/// Yields `(1-based line number, line)`; blank lines are skipped.
pub(crate) fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.is_empty())
}

pub(crate) fn check_tsv_field(field: &str, value: &str) -> Result<(), FormatError> {
    if value.contains('\n') {
        return Err(FormatError::Unencodable {
            field: field.to_string(),
            reason: "contains a newline",
        });
    }
    if value.contains('\t') {
        return Err(FormatError::Unencodable {
            field: field.to_string(),
            reason: "contains a tab",
        });
    }
    Ok(())
}
