//! Lossless rule-based sentence splitting.
//!
//! A boundary is placed after a run of terminal punctuation (`.`, `!`, `?`,
//! `…`, optionally followed by closing quotes or brackets) and the whitespace
//! that follows it, unless
//!
//! * the period closes a known abbreviation,
//! * the next sentence would start with a lowercase letter, or
//! * the punctuation is not followed by whitespace (`3.5`, `e.g.x`).
//!
//! Trailing whitespace stays with the sentence it follows, so concatenating
//! the segments always reproduces the input.

use std::collections::HashSet;
use std::sync::OnceLock;

use thiserror::Error;

const DEFAULT_ABBREVIATIONS: &str = include_str!("../resources/abbreviations.txt");

const TERMINATORS: &[char] = &['.', '!', '?', '…'];
const CLOSERS: &[char] = &['"', '\'', '”', '’', ')', ']', '»'];
const OPENERS: &[char] = &['"', '\'', '“', '‘', '(', '[', '«'];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    /// Byte offset of the segment in the source text.
    pub start: usize,
    pub text: String,
}

impl Segment {
    pub fn end(&self) -> usize {
        self.start + self.text.len()
    }

    /// Splits into (leading whitespace, content, trailing whitespace).
    pub fn parts(&self) -> (&str, &str, &str) {
        let content = self.text.trim();
        let lead = self.text.len() - self.text.trim_start().len();
        (&self.text[..lead], content, &self.text[lead + content.len()..])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Segmentation {
    segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentError {
    #[error("span {start}..{end} is outside the text (length {len})")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
}

impl Segmentation {
    /// A segmentation that treats `text` as one unit.
    pub fn whole(text: &str) -> Self {
        if text.is_empty() {
            return Self::default();
        }
        Self {
            segments: vec![Segment {
                start: 0,
                text: text.to_string(),
            }],
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn join(&self) -> String {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }

    fn text_len(&self) -> usize {
        self.segments.last().map_or(0, Segment::end)
    }

    /// Merges every segment that overlaps the byte span `[start, end)` into
    /// one, so the span is never split across translation units. An empty
    /// span selects the segment containing `start`.
    pub fn group_for_span(&self, start: usize, end: usize) -> Result<Segmentation, SegmentError> {
        let len = self.text_len();
        if start > end || end > len {
            return Err(SegmentError::SpanOutOfBounds { start, end, len });
        }
        let overlaps = |s: &Segment| {
            if start == end {
                s.start <= start && start < s.end().max(s.start + 1)
            } else {
                s.start < end && start < s.end()
            }
        };
        let first = self.segments.iter().position(overlaps);
        let Some(first) = first else {
            return Ok(self.clone());
        };
        let last = self.segments.iter().rposition(overlaps).unwrap_or(first);
        let mut segments = Vec::with_capacity(self.segments.len() - (last - first));
        segments.extend_from_slice(&self.segments[..first]);
        segments.push(Segment {
            start: self.segments[first].start,
            text: self.segments[first..=last].iter().map(|s| s.text.as_str()).collect(),
        });
        segments.extend_from_slice(&self.segments[last + 1..]);
        Ok(Segmentation { segments })
    }

    /// Index of the segment containing byte `offset`.
    pub fn segment_at(&self, offset: usize) -> Option<usize> {
        self.segments
            .iter()
            .position(|s| s.start <= offset && offset < s.end())
    }
}

#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: HashSet<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        static DEFAULT: OnceLock<Segmenter> = OnceLock::new();
        DEFAULT
            .get_or_init(|| Segmenter::from_list(DEFAULT_ABBREVIATIONS))
            .clone()
    }
}

impl Segmenter {
    pub fn new<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            abbreviations: abbreviations
                .into_iter()
                .map(|a| a.as_ref().trim().trim_end_matches('.').to_lowercase())
                .filter(|a| !a.is_empty())
                .collect(),
        }
    }

    /// Reads a resource file: one abbreviation per line, `#` comments.
    pub fn from_list(list: &str) -> Self {
        Self::new(
            list.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn is_abbreviation(&self, word: &str) -> bool {
        self.abbreviations.contains(&word.to_lowercase())
    }

    pub fn split(&self, text: &str) -> Segmentation {
        let mut segments = Vec::new();
        let mut seg_start = 0;
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if !TERMINATORS.contains(&c) {
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while j < chars.len() && (TERMINATORS.contains(&chars[j].1) || CLOSERS.contains(&chars[j].1)) {
                j += 1;
            }
            if j == chars.len() || !chars[j].1.is_whitespace() {
                i = j;
                continue;
            }
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            if k == chars.len() {
                break;
            }
            let next = chars[k].1;
            let run_is_period = c == '.' && chars[i + 1..j].iter().all(|(_, ch)| CLOSERS.contains(ch));
            let blocked = next.is_lowercase() || (run_is_period && self.period_is_abbreviation(&text[seg_start..pos]));
            if !blocked {
                let end = chars[k].0;
                segments.push(Segment {
                    start: seg_start,
                    text: text[seg_start..end].to_string(),
                });
                seg_start = end;
            }
            i = k;
        }
        if seg_start < text.len() {
            segments.push(Segment {
                start: seg_start,
                text: text[seg_start..].to_string(),
            });
        }
        Segmentation { segments }
    }

    /// `before` is the text up to (not including) a period.
    fn period_is_abbreviation(&self, before: &str) -> bool {
        let word = before
            .rsplit(char::is_whitespace)
            .next()
            .unwrap_or("")
            .trim_start_matches(OPENERS);
        !word.is_empty() && self.is_abbreviation(word)
    }
}

/// Splits with the built-in English/Portuguese abbreviation list.
pub fn split_sentences(text: &str) -> Segmentation {
    Segmenter::default().split(text)
}
