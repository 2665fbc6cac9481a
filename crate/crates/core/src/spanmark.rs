//! Answer-span marking for translating extractive QA contexts.
//!
//! The answer is never translated on its own. Instead the context is sent to
//! the translator with the answer wrapped in a start and an end delimiter,
//! and the answer (and its new offset) is read back from wherever the
//! delimiters ended up in the translation.
//!
//! Recovery removes both delimiters. When a delimiter sits between two
//! whitespace runs, the whitespace around it is collapsed to one space. The
//! recovered answer is the text between the delimiters with surrounding
//! whitespace trimmed, and offsets are character offsets into the cleaned
//! context.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{byte_to_char, char_to_byte};

pub const DEFAULT_START: &str = "<answer_start>";
pub const DEFAULT_END: &str = "<answer_end>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPair", into = "RawPair")]
pub struct DelimiterPair {
    start: String,
    end: String,
}

#[derive(Serialize, Deserialize)]
struct RawPair {
    start: String,
    end: String,
}

impl TryFrom<RawPair> for DelimiterPair {
    type Error = DelimiterError;
    fn try_from(raw: RawPair) -> Result<Self, Self::Error> {
        DelimiterPair::new(raw.start, raw.end)
    }
}

impl From<DelimiterPair> for RawPair {
    fn from(p: DelimiterPair) -> Self {
        RawPair {
            start: p.start,
            end: p.end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DelimiterError {
    #[error("delimiter tokens must be non-empty")]
    Empty,
    #[error("start and end delimiters must differ and neither may contain the other")]
    Overlapping,
    #[error("delimiter tokens must not contain whitespace")]
    Whitespace,
    #[error("expected START,END but got {0:?}")]
    Unparseable(String),
}

impl DelimiterPair {
    pub fn new(start: impl Into<String>, end: impl Into<String>) -> Result<Self, DelimiterError> {
        let (start, end) = (start.into(), end.into());
        if start.is_empty() || end.is_empty() {
            return Err(DelimiterError::Empty);
        }
        if start.contains(&end) || end.contains(&start) {
            return Err(DelimiterError::Overlapping);
        }
        if start.chars().chain(end.chars()).any(char::is_whitespace) {
            return Err(DelimiterError::Whitespace);
        }
        Ok(Self { start, end })
    }

    /// Parses the `START,END` form used on the command line.
    pub fn parse(spec: &str) -> Result<Self, DelimiterError> {
        let (s, e) = spec
            .split_once(',')
            .ok_or_else(|| DelimiterError::Unparseable(spec.to_string()))?;
        Self::new(s, e)
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn end(&self) -> &str {
        &self.end
    }

    /// True when `text` contains either token.
    pub fn collides_with(&self, text: &str) -> bool {
        text.contains(&self.start) || text.contains(&self.end)
    }

    /// Removes every occurrence of both tokens, nothing else.
    pub fn strip(&self, text: &str) -> String {
        text.replace(&self.start, "").replace(&self.end, "")
    }
}

impl Default for DelimiterPair {
    fn default() -> Self {
        Self {
            start: DEFAULT_START.to_string(),
            end: DEFAULT_END.to_string(),
        }
    }
}

/// A context with exactly one start delimiter followed by exactly one end
/// delimiter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedContext {
    text: String,
    delimiters: DelimiterPair,
}

impl MarkedContext {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn delimiters(&self) -> &DelimiterPair {
        &self.delimiters
    }

    pub fn into_text(self) -> String {
        self.text
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarkError {
    #[error("invalid span: {0}")]
    InvalidSpan(&'static str),
    #[error("context already contains a delimiter token")]
    DelimiterCollision,
}

/// Wraps `answer_text`, found at character offset `answer_start` of
/// `context`, in the delimiters.
///
/// The answer must be non-empty and must not begin or end with whitespace
/// (trim it first); otherwise the recovered span would not round-trip.
pub fn mark(
    context: &str,
    answer_start: usize,
    answer_text: &str,
    delimiters: &DelimiterPair,
) -> Result<MarkedContext, MarkError> {
    let begin = char_to_byte(context, answer_start).ok_or(MarkError::InvalidSpan("offset beyond context"))?;
    if !context[begin..].starts_with(answer_text) {
        return Err(MarkError::InvalidSpan("answer text not at offset"));
    }
    mark_bytes(context, begin, begin + answer_text.len(), delimiters)
}

/// [`mark`] over a byte range `[begin, end)` that lies on char boundaries.
pub fn mark_bytes(
    context: &str,
    begin: usize,
    end: usize,
    delimiters: &DelimiterPair,
) -> Result<MarkedContext, MarkError> {
    if begin >= end || end > context.len() {
        return Err(MarkError::InvalidSpan("empty or out-of-bounds span"));
    }
    let answer = &context[begin..end];
    if answer.starts_with(char::is_whitespace) || answer.ends_with(char::is_whitespace) {
        return Err(MarkError::InvalidSpan("answer has surrounding whitespace"));
    }
    if delimiters.collides_with(context) {
        return Err(MarkError::DelimiterCollision);
    }
    let mut text = String::with_capacity(context.len() + delimiters.start.len() + delimiters.end.len());
    text.push_str(&context[..begin]);
    text.push_str(&delimiters.start);
    text.push_str(answer);
    text.push_str(&delimiters.end);
    text.push_str(&context[end..]);
    Ok(MarkedContext {
        text,
        delimiters: delimiters.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recovered {
    pub context: String,
    pub answer_text: String,
    /// Character offset into `context`.
    pub answer_start: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RecoverError {
    #[error("start delimiter missing")]
    MissingStartDelimiter,
    #[error("end delimiter missing")]
    MissingEndDelimiter,
    #[error("a delimiter occurs more than once")]
    DuplicateDelimiters,
    #[error("end delimiter precedes start delimiter")]
    OutOfOrderDelimiters,
    #[error("nothing but whitespace between the delimiters")]
    EmptyAnswer,
}

/// Reads the answer span back out of a translated, marked context.
pub fn recover(translated: &str, delimiters: &DelimiterPair) -> Result<Recovered, RecoverError> {
    let starts: Vec<_> = translated.match_indices(delimiters.start.as_str()).collect();
    let ends: Vec<_> = translated.match_indices(delimiters.end.as_str()).collect();
    let (s, e) = match (starts.as_slice(), ends.as_slice()) {
        ([], _) => return Err(RecoverError::MissingStartDelimiter),
        (_, []) => return Err(RecoverError::MissingEndDelimiter),
        ([(s, _)], [(e, _)]) => (*s, *e),
        _ => return Err(RecoverError::DuplicateDelimiters),
    };
    if e < s {
        return Err(RecoverError::OutOfOrderDelimiters);
    }

    let before = &translated[..s];
    let inside = &translated[s + delimiters.start.len()..e];
    let after = &translated[e + delimiters.end.len()..];

    let answer = inside.trim();
    if answer.is_empty() {
        return Err(RecoverError::EmptyAnswer);
    }
    let lead = &inside[..inside.len() - inside.trim_start().len()];
    let trail = &inside[inside.trim_end().len()..];

    let mut context = String::with_capacity(translated.len());
    join_at_delimiter(&mut context, before, lead);
    let answer_start = byte_to_char(&context, context.len());
    context.push_str(answer);
    join_at_delimiter(&mut context, trail, after);

    Ok(Recovered {
        context,
        answer_text: answer.to_string(),
        answer_start,
    })
}

/// Appends `left` + `right` (the two sides of a removed delimiter) to `out`,
/// collapsing the whitespace between them to one space when both sides are
/// whitespace at the junction.
fn join_at_delimiter(out: &mut String, left: &str, right: &str) {
    let left_ws = left.ends_with(char::is_whitespace);
    let right_ws = right.starts_with(char::is_whitespace);
    if left_ws && right_ws {
        out.push_str(left.trim_end());
        out.push(' ');
        out.push_str(right.trim_start());
    } else {
        out.push_str(left);
        out.push_str(right);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d() -> DelimiterPair {
        DelimiterPair::default()
    }

    #[test]
    fn marks_portuguese_example() {
        let m = mark("O Brasil tem 26 estados", 13, "26 estados", &d()).unwrap();
        assert_eq!(m.text(), "O Brasil tem <answer_start>26 estados<answer_end>");
    }

    #[test]
    fn whole_context_answer() {
        let m = mark("tudo", 0, "tudo", &d()).unwrap();
        assert_eq!(m.text(), "<answer_start>tudo<answer_end>");
    }

    #[test]
    fn mark_rejects_bad_spans() {
        assert!(matches!(mark("abc", 5, "a", &d()), Err(MarkError::InvalidSpan(_))));
        assert!(matches!(mark("abc", 1, "a", &d()), Err(MarkError::InvalidSpan(_))));
        assert!(matches!(mark("abc", 0, "", &d()), Err(MarkError::InvalidSpan(_))));
        assert!(matches!(mark("a bc", 1, " b", &d()), Err(MarkError::InvalidSpan(_))));
        assert_eq!(
            mark("x <answer_end> y", 0, "x", &d()),
            Err(MarkError::DelimiterCollision)
        );
    }

    #[test]
    fn recovers_translated_example() {
        let r = recover("Brazil has <answer_start>26 states<answer_end>", &d()).unwrap();
        assert_eq!(
            r,
            Recovered {
                context: "Brazil has 26 states".into(),
                answer_text: "26 states".into(),
                answer_start: 11
            }
        );
    }

    #[test]
    fn recover_error_taxonomy() {
        let cases = [
            ("no marks", RecoverError::MissingStartDelimiter),
            ("<answer_end> only", RecoverError::MissingStartDelimiter),
            ("<answer_start> only", RecoverError::MissingEndDelimiter),
            ("a <answer_end> b <answer_start> c", RecoverError::OutOfOrderDelimiters),
            ("<answer_start>a<answer_start>b<answer_end>", RecoverError::DuplicateDelimiters),
            ("<answer_start>a<answer_end>b<answer_end>", RecoverError::DuplicateDelimiters),
            ("x <answer_start>  <answer_end> y", RecoverError::EmptyAnswer),
        ];
        for (input, want) in cases {
            assert_eq!(recover(input, &d()), Err(want), "{input}");
        }
    }

    #[test]
    fn whitespace_around_moved_delimiters() {
        let r = recover("Brazil has <answer_start> 26 states <answer_end> today.", &d()).unwrap();
        assert_eq!(r.context, "Brazil has 26 states today.");
        assert_eq!(r.answer_text, "26 states");
        assert_eq!(r.answer_start, 11);

        // one-sided whitespace is kept as is
        let r = recover("has<answer_start> 26<answer_end>.", &d()).unwrap();
        assert_eq!(r.context, "has 26.");
        assert_eq!(r.answer_start, 4);
    }

    #[test]
    fn offsets_are_in_characters() {
        let m = mark("São Paulo é a maior", 12, "a maior", &d()).unwrap();
        let r = recover(m.text(), &d()).unwrap();
        assert_eq!(r.answer_start, 12);
        assert_eq!(r.context, "São Paulo é a maior");
    }

    #[test]
    fn delimiter_pair_validation() {
        assert_eq!(DelimiterPair::new("", "x"), Err(DelimiterError::Empty));
        assert_eq!(DelimiterPair::new("<a>", "<a>"), Err(DelimiterError::Overlapping));
        assert_eq!(DelimiterPair::new("[[", "[[["), Err(DelimiterError::Overlapping));
        assert_eq!(DelimiterPair::new("< a", "b"), Err(DelimiterError::Whitespace));
        assert_eq!(DelimiterPair::parse("[[,]]").unwrap().end(), "]]");
    }

    fn context_and_span() -> impl Strategy<Value = (String, usize, String)> {
        "[a-zA-Záéãç .,]{1,60}".prop_flat_map(|ctx| {
            let chars: Vec<char> = ctx.chars().collect();
            let n = chars.len();
            (Just(ctx), 0..n, 1..=n)
        })
        .prop_filter_map("needs a trimmed non-empty answer", |(ctx, a, b)| {
            let chars: Vec<char> = ctx.chars().collect();
            let (lo, hi) = (a.min(b), a.max(b));
            let answer: String = chars[lo..hi.max(lo + 1).min(chars.len())].iter().collect();
            (!answer.is_empty() && answer.trim() == answer).then_some((ctx, lo, answer))
        })
    }

    proptest! {
        #[test]
        fn strip_of_mark_is_context((ctx, start, answer) in context_and_span()) {
            let m = mark(&ctx, start, &answer, &d()).unwrap();
            prop_assert_eq!(d().strip(m.text()), ctx);
        }

        #[test]
        fn recover_inverts_mark((ctx, start, answer) in context_and_span()) {
            let m = mark(&ctx, start, &answer, &d()).unwrap();
            let r = recover(m.text(), &d()).unwrap();
            prop_assert_eq!(r, Recovered { context: ctx, answer_text: answer, answer_start: start });
        }

        #[test]
        fn recover_output_is_aligned(s in "[a-z <>_/]{0,40}(<answer_start>)?[a-z ]{0,10}(<answer_end>)?[a-z .]{0,20}") {
            if let Ok(r) = recover(&s, &d()) {
                prop_assert!(crate::formats::squad::answer_at(&r.context, r.answer_start, &r.answer_text));
            }
        }
    }
}
