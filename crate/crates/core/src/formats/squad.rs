//! SQuAD v1.1 JSON (`data -> paragraphs -> qas -> answers`).
//!
//! Parsing flattens the nesting into one [`QaExample`] per question. Writing
//! regroups consecutive examples that share a title into one article and
//! consecutive examples that share a context into one paragraph, so a parsed
//! file writes back with the same structure.

use std::collections::HashSet;

use serde::{Deserialize, Deserializer, Serialize};

use super::FormatError;
use crate::text::{char_to_byte, find_all};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    /// Character offset into the context.
    pub answer_start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaExample {
    pub id: String,
    pub title: String,
    pub context: String,
    pub question: String,
    pub answers: Vec<Answer>,
}

impl QaExample {
    /// True when `answer` occurs in the context at its declared offset.
    pub fn answer_is_aligned(&self, answer: &Answer) -> bool {
        answer_at(&self.context, answer.answer_start, &answer.text)
    }

    /// Index of the first answer that is not aligned with the context.
    pub fn first_misaligned(&self) -> Option<usize> {
        self.answers.iter().position(|a| !self.answer_is_aligned(a))
    }
}

pub(crate) fn answer_at(context: &str, answer_start: usize, text: &str) -> bool {
    char_to_byte(context, answer_start).is_some_and(|b| context[b..].starts_with(text))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Identity of the file the examples came from.
    pub source: String,
    /// BCP-47 language tag of the text.
    pub language: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaDataset {
    provenance: Provenance,
    examples: Vec<QaExample>,
}

impl QaDataset {
    /// Validates id uniqueness and answer alignment.
    pub fn new(provenance: Provenance, examples: Vec<QaExample>) -> Result<Self, FormatError> {
        let mut seen = HashSet::new();
        for ex in &examples {
            if !seen.insert(ex.id.as_str()) {
                return Err(FormatError::DuplicateId(ex.id.clone()));
            }
            if let Some(i) = ex.first_misaligned() {
                return Err(FormatError::OffsetMismatch {
                    id: ex.id.clone(),
                    answer: ex.answers[i].text.clone(),
                    answer_start: ex.answers[i].answer_start,
                });
            }
        }
        Ok(Self {
            provenance,
            examples,
        })
    }

    pub fn empty(provenance: Provenance) -> Self {
        Self {
            provenance,
            examples: Vec::new(),
        }
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn examples(&self) -> &[QaExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&QaExample> {
        self.examples.iter().find(|e| e.id == id)
    }

    pub fn into_parts(self) -> (Provenance, Vec<QaExample>) {
        (self.provenance, self.examples)
    }
}

/// What to do with an answer whose `answer_start` does not point at its text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetPolicy {
    /// Fail the whole parse with [`FormatError::OffsetMismatch`].
    Strict,
    /// Drop the example and record it.
    Reject,
    /// Move the offset to the answer text when it occurs exactly once in the
    /// context; otherwise drop the example and record it.
    #[default]
    SearchAndFix,
}

#[derive(Debug, Clone)]
pub struct QaParseOptions {
    pub offsets: OffsetPolicy,
    /// Reject questions with an empty answer list.
    pub require_answers: bool,
    /// Overrides the `source` recorded in the file.
    pub source: Option<String>,
    /// Overrides the `language` recorded in the file.
    pub language: Option<String>,
}

impl Default for QaParseOptions {
    fn default() -> Self {
        Self {
            offsets: OffsetPolicy::SearchAndFix,
            require_answers: true,
            source: None,
            language: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    NoAnswers,
    AnswerNotFound,
    AmbiguousAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub id: String,
    pub reason: RejectionReason,
}

#[derive(Debug, Clone)]
pub struct QaParse {
    pub dataset: QaDataset,
    pub rejected: Vec<Rejection>,
    /// Ids of examples whose offsets were repaired.
    pub repaired: Vec<String>,
}

// Raw serde layout. Unknown keys (e.g. v2 `is_impossible`) are ignored.

#[derive(Deserialize, Serialize)]
struct RawFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    language: Option<String>,
    data: Vec<RawArticle>,
}

#[derive(Deserialize, Serialize)]
struct RawArticle {
    #[serde(default)]
    title: String,
    paragraphs: Vec<RawParagraph>,
}

#[derive(Deserialize, Serialize)]
struct RawParagraph {
    context: String,
    qas: Vec<RawQa>,
}

#[derive(Deserialize, Serialize)]
struct RawQa {
    #[serde(deserialize_with = "string_or_number")]
    id: String,
    question: String,
    #[serde(default)]
    answers: Vec<Answer>,
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        Str(String),
        Num(serde_json::Number),
    }
    Ok(match Id::deserialize(d)? {
        Id::Str(s) => s,
        Id::Num(n) => n.to_string(),
    })
}

pub fn parse_qa(bytes: &[u8], opts: &QaParseOptions) -> Result<QaParse, FormatError> {
    let raw: RawFile =
        serde_json::from_slice(bytes).map_err(|e| FormatError::MalformedSchema(e.to_string()))?;

    let provenance = Provenance {
        source: opts.source.clone().or(raw.source).unwrap_or_default(),
        language: opts
            .language
            .clone()
            .or(raw.language)
            .unwrap_or_else(|| "und".to_string()),
    };

    let mut examples = Vec::new();
    let mut rejected = Vec::new();
    let mut repaired = Vec::new();
    let mut seen = HashSet::new();

    for article in raw.data {
        for paragraph in article.paragraphs {
            for qa in paragraph.qas {
                if !seen.insert(qa.id.clone()) {
                    return Err(FormatError::DuplicateId(qa.id));
                }
                let mut example = QaExample {
                    id: qa.id,
                    title: article.title.clone(),
                    context: paragraph.context.clone(),
                    question: qa.question,
                    answers: qa.answers,
                };
                if example.answers.is_empty() && opts.require_answers {
                    rejected.push(Rejection {
                        id: example.id,
                        reason: RejectionReason::NoAnswers,
                    });
                    continue;
                }
                match align_answers(&mut example, opts.offsets)? {
                    Alignment::Clean => examples.push(example),
                    Alignment::Repaired => {
                        repaired.push(example.id.clone());
                        examples.push(example);
                    }
                    Alignment::Rejected(reason) => rejected.push(Rejection {
                        id: example.id,
                        reason,
                    }),
                }
            }
        }
    }

    Ok(QaParse {
        dataset: QaDataset {
            provenance,
            examples,
        },
        rejected,
        repaired,
    })
}

enum Alignment {
    Clean,
    Repaired,
    Rejected(RejectionReason),
}

fn align_answers(example: &mut QaExample, policy: OffsetPolicy) -> Result<Alignment, FormatError> {
    let mut outcome = Alignment::Clean;
    for i in 0..example.answers.len() {
        if example.answer_is_aligned(&example.answers[i]) {
            continue;
        }
        let answer = &example.answers[i];
        match policy {
            OffsetPolicy::Strict => {
                return Err(FormatError::OffsetMismatch {
                    id: example.id.clone(),
                    answer: answer.text.clone(),
                    answer_start: answer.answer_start,
                })
            }
            OffsetPolicy::Reject => return Ok(Alignment::Rejected(RejectionReason::AnswerNotFound)),
            OffsetPolicy::SearchAndFix => {
                let hits = find_all(&example.context, &answer.text);
                match hits.as_slice() {
                    [] => return Ok(Alignment::Rejected(RejectionReason::AnswerNotFound)),
                    [byte] => {
                        let start = crate::text::byte_to_char(&example.context, *byte);
                        example.answers[i].answer_start = start;
                        outcome = Alignment::Repaired;
                    }
                    _ => return Ok(Alignment::Rejected(RejectionReason::AmbiguousAnswer)),
                }
            }
        }
    }
    Ok(outcome)
}

/// Serializes to pretty-printed SQuAD v1.1 JSON.
pub fn write_qa(dataset: &QaDataset) -> Vec<u8> {
    let mut data: Vec<RawArticle> = Vec::new();
    for ex in &dataset.examples {
        let new_article = data.last().is_none_or(|a| a.title != ex.title);
        if new_article {
            data.push(RawArticle {
                title: ex.title.clone(),
                paragraphs: Vec::new(),
            });
        }
        let article = data.last_mut().expect("article pushed above");
        let new_paragraph = new_article
            || article
                .paragraphs
                .last()
                .is_none_or(|p| p.context != ex.context);
        if new_paragraph {
            article.paragraphs.push(RawParagraph {
                context: ex.context.clone(),
                qas: Vec::new(),
            });
        }
        article
            .paragraphs
            .last_mut()
            .expect("paragraph pushed above")
            .qas
            .push(RawQa {
                id: ex.id.clone(),
                question: ex.question.clone(),
                answers: ex.answers.clone(),
            });
    }
    let raw = RawFile {
        version: Some("1.1".to_string()),
        source: Some(dataset.provenance.source.clone()),
        language: Some(dataset.provenance.language.clone()),
        data,
    };
    let mut out = serde_json::to_vec_pretty(&raw).expect("string-keyed structs always serialize");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(context: &str, text: &str, start: usize) -> String {
        serde_json::json!({
            "version": "1.1",
            "data": [{"title": "t", "paragraphs": [{"context": context, "qas": [
                {"id": "q1", "question": "Where?", "answers": [{"text": text, "answer_start": start}]}
            ]}]}]
        })
        .to_string()
    }

    #[test]
    fn minimal_file() {
        let parsed = parse_qa(one("Capital: Paris.", "Paris", 9).as_bytes(), &Default::default()).unwrap();
        assert_eq!(parsed.dataset.len(), 1);
        assert!(parsed.rejected.is_empty() && parsed.repaired.is_empty());
        assert_eq!(parsed.dataset.examples()[0].answers[0].answer_start, 9);
    }

    #[test]
    fn repairs_offset_when_answer_is_unique() {
        let parsed = parse_qa(one("Capital: Paris.", "Paris", 2).as_bytes(), &Default::default()).unwrap();
        assert_eq!(parsed.repaired, vec!["q1".to_string()]);
        assert_eq!(parsed.dataset.examples()[0].answers[0].answer_start, 9);
    }

    #[test]
    fn ambiguous_repair_rejects() {
        let parsed = parse_qa(one("Paris or Paris", "Paris", 3).as_bytes(), &Default::default()).unwrap();
        assert!(parsed.dataset.is_empty());
        assert_eq!(parsed.rejected[0].reason, RejectionReason::AmbiguousAnswer);
    }

    #[test]
    fn strict_policy_errors() {
        let opts = QaParseOptions {
            offsets: OffsetPolicy::Strict,
            ..Default::default()
        };
        let err = parse_qa(one("Capital: Paris.", "Paris", 2).as_bytes(), &opts).unwrap_err();
        assert!(matches!(err, FormatError::OffsetMismatch { .. }));
    }

    #[test]
    fn offsets_are_characters() {
        // "São" has a two-byte char before the answer
        let parsed = parse_qa(one("São Paulo é grande", "grande", 12).as_bytes(), &QaParseOptions {
            offsets: OffsetPolicy::Strict,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(parsed.dataset.len(), 1);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let doc = serde_json::json!({"data": [{"title": "", "paragraphs": [{"context": "ab", "qas": [
            {"id": "x", "question": "?", "answers": [{"text": "a", "answer_start": 0}]},
            {"id": "x", "question": "?", "answers": [{"text": "b", "answer_start": 1}]}
        ]}]}]});
        let err = parse_qa(doc.to_string().as_bytes(), &Default::default()).unwrap_err();
        assert!(matches!(err, FormatError::DuplicateId(id) if id == "x"));
    }

    #[test]
    fn missing_answers_rejected_for_training() {
        let doc = r#"{"data":[{"title":"","paragraphs":[{"context":"ab","qas":[{"id":7,"question":"?","answers":[]}]}]}]}"#;
        let parsed = parse_qa(doc.as_bytes(), &Default::default()).unwrap();
        assert_eq!(parsed.rejected, vec![Rejection { id: "7".into(), reason: RejectionReason::NoAnswers }]);
    }

    #[test]
    fn malformed_schema() {
        assert!(matches!(
            parse_qa(br#"{"data":[{"paragraphs":[{"qas":[]}]}]}"#, &Default::default()),
            Err(FormatError::MalformedSchema(_))
        ));
        assert!(matches!(parse_qa(b"not json", &Default::default()), Err(FormatError::MalformedSchema(_))));
    }

    #[test]
    fn empty_dataset_writes_empty_data_list() {
        let ds = QaDataset::empty(Provenance::default());
        let bytes = write_qa(&ds);
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["data"], serde_json::json!([]));
        assert!(parse_qa(&bytes, &Default::default()).unwrap().dataset.is_empty());
    }

    #[test]
    fn write_is_byte_stable() {
        let parsed = parse_qa(one("Capital: Paris.", "Paris", 9).as_bytes(), &Default::default()).unwrap();
        let first = write_qa(&parsed.dataset);
        let again = parse_qa(&first, &Default::default()).unwrap();
        assert_eq!(again.dataset, parsed.dataset);
        assert_eq!(write_qa(&again.dataset), first);
    }
}
