use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::engine::run_units;
use super::{DiscardReason, DiscardReport, PipelineError, RunOptions, Translated};
use crate::backend::BackendClient;
use crate::formats::{Answer, QaDataset, QaExample};
use crate::segment::{Segment, Segmentation, Segmenter};
use crate::spanmark::{mark_bytes, recover, DelimiterPair};
use crate::text::{char_len, char_to_byte};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QaMode {
    /// Each context sentence is its own translation unit; the sentences an
    /// answer touches are merged into one unit.
    #[default]
    PerSentence,
    /// The whole marked context is one unit.
    WholeContext,
}

#[derive(Debug, Clone, Default)]
pub struct QaSettings {
    pub delimiters: DelimiterPair,
    pub mode: QaMode,
    pub segmenter: Segmenter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaOutput {
    pub dataset: QaDataset,
    /// Full gold answer lists of kept examples that had more than one
    /// answer; only the first is carried through translation.
    pub original_answers: BTreeMap<String, Vec<Answer>>,
}

/// A slice of text around one translation unit.
struct Piece {
    lead: String,
    unit: Option<usize>,
    trail: String,
}

struct Plan {
    context: Vec<Piece>,
    question: usize,
    marked: bool,
}

fn push_piece(text: &str, units: &mut Vec<String>, pieces: &mut Vec<Piece>) {
    let seg = Segment {
        start: 0,
        text: text.to_string(),
    };
    let (lead, core, trail) = seg.parts();
    if core.is_empty() {
        pieces.push(Piece {
            lead: text.to_string(),
            unit: None,
            trail: String::new(),
        });
        return;
    }
    units.push(core.to_string());
    pieces.push(Piece {
        lead: lead.to_string(),
        unit: Some(units.len() - 1),
        trail: trail.to_string(),
    });
}

/// First answer with surrounding whitespace trimmed, as a byte range.
fn answer_bytes(example: &QaExample) -> Option<Result<(usize, usize), DiscardReason>> {
    let answer = example.answers.first()?;
    let trimmed = answer.text.trim_start();
    let lead_chars = char_len(&answer.text) - char_len(trimmed);
    let trimmed = trimmed.trim_end();
    if trimmed.is_empty() {
        return Some(Err(DiscardReason::InvalidSpan));
    }
    let begin = match char_to_byte(&example.context, answer.answer_start + lead_chars) {
        Some(b) if example.context[b..].starts_with(trimmed) => b,
        _ => return Some(Err(DiscardReason::InvalidSpan)),
    };
    Some(Ok((begin, begin + trimmed.len())))
}

fn plan_example(
    example: &QaExample,
    settings: &QaSettings,
    units: &mut Vec<String>,
) -> Result<Plan, DiscardReason> {
    let span = match answer_bytes(example) {
        Some(Ok(span)) => Some(span),
        Some(Err(reason)) => return Err(reason),
        None => None,
    };
    if span.is_some() && settings.delimiters.collides_with(&example.context) {
        return Err(DiscardReason::DelimiterCollision);
    }

    let segmentation = match settings.mode {
        QaMode::PerSentence => settings.segmenter.split(&example.context),
        QaMode::WholeContext => Segmentation::whole(&example.context),
    };
    let segmentation = match span {
        Some((b, e)) => segmentation
            .group_for_span(b, e)
            .map_err(|_| DiscardReason::InvalidSpan)?,
        None => segmentation,
    };

    let first_unit = units.len();
    let mut pieces = Vec::with_capacity(segmentation.len());
    for seg in segmentation.segments() {
        match span {
            Some((b, e)) if seg.start <= b && e <= seg.end() => {
                let marked = mark_bytes(&seg.text, b - seg.start, e - seg.start, &settings.delimiters)
                    .map_err(|err| {
                        units.truncate(first_unit);
                        DiscardReason::from(err)
                    })?;
                push_piece(marked.text(), units, &mut pieces);
            }
            _ => push_piece(&seg.text, units, &mut pieces),
        }
    }
    units.push(example.question.clone());
    Ok(Plan {
        context: pieces,
        question: units.len() - 1,
        marked: span.is_some(),
    })
}

/// Translates contexts and questions, carrying the first answer of each
/// example through translation between delimiters.
///
/// Examples whose delimiters do not survive translation intact are dropped
/// and counted in the report by reason.
pub fn translate_qa_dataset(
    dataset: &QaDataset,
    client: &BackendClient,
    settings: &QaSettings,
    opts: &RunOptions,
) -> Result<Translated<QaOutput>, PipelineError> {
    let mut units = Vec::new();
    let plans: Vec<Result<Plan, DiscardReason>> = dataset
        .examples()
        .iter()
        .map(|ex| plan_example(ex, settings, &mut units))
        .collect();

    let results = run_units("qa", client, &units, opts)?;
    let out = &results.outputs;

    let mut report = DiscardReport::new(dataset.len());
    let mut kept = Vec::new();
    let mut original_answers = BTreeMap::new();

    for (example, plan) in dataset.examples().iter().zip(plans) {
        let plan = match plan {
            Ok(p) => p,
            Err(reason) => {
                report.discard(reason, 0);
                continue;
            }
        };
        let unit_ids = plan.context.iter().filter_map(|p| p.unit).chain([plan.question]);
        let billed: u64 = unit_ids.clone().map(|i| char_len(&units[i]) as u64).sum();
        if unit_ids.clone().any(|i| out[i].is_none()) {
            report.discard(DiscardReason::LengthMismatch, billed);
            continue;
        }

        let mut context = String::new();
        for piece in &plan.context {
            context.push_str(&piece.lead);
            if let Some(i) = piece.unit {
                context.push_str(out[i].as_deref().unwrap_or_default());
            }
            context.push_str(&piece.trail);
        }
        let question = out[plan.question].clone().unwrap_or_default();

        let (context, answers) = if plan.marked {
            match recover(&context, &settings.delimiters) {
                Ok(r) => (
                    r.context,
                    vec![Answer {
                        text: r.answer_text,
                        answer_start: r.answer_start,
                    }],
                ),
                Err(err) => {
                    report.discard(err.into(), billed);
                    continue;
                }
            }
        } else {
            (context, Vec::new())
        };

        if example.answers.len() > 1 {
            original_answers.insert(example.id.clone(), example.answers.clone());
        }
        report.keep();
        kept.push(QaExample {
            id: example.id.clone(),
            title: example.title.clone(),
            context,
            question,
            answers,
        });
    }

    let mut provenance = dataset.provenance().clone();
    provenance.language = client.config().target_lang.clone();
    let dataset = QaDataset::new(provenance, kept)?;
    Ok(Translated {
        output: QaOutput {
            dataset,
            original_answers,
        },
        report,
        meter: results.meter,
        emitted_characters: results.emitted_characters,
        batches: results.batches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::BackendConfig;
    use crate::formats::Provenance;

    fn example(id: &str, context: &str, answer: &str) -> QaExample {
        let start = context.find(answer).map(|b| char_len(&context[..b])).unwrap();
        QaExample {
            id: id.into(),
            title: "t".into(),
            context: context.into(),
            question: format!("Question {id}?"),
            answers: vec![Answer { text: answer.into(), answer_start: start }],
        }
    }

    fn dataset(examples: Vec<QaExample>) -> QaDataset {
        QaDataset::new(Provenance { source: "test".into(), language: "pt".into() }, examples).unwrap()
    }

    fn client(endpoint: &str) -> BackendClient {
        let cfg = BackendConfig { endpoint: endpoint.into(), target_lang: "pt".into(), ..Default::default() };
        BackendClient::from_config(cfg, &DelimiterPair::default()).unwrap()
    }

    #[test]
    fn identity_is_a_fixed_point_in_both_modes() {
        let ds = dataset(vec![
            example("1", "O Brasil tem 26 estados. A capital é Brasília.", "26 estados"),
            example("2", "  Frase um. Frase dois com resposta. Três.  ", "dois com resposta. Três"),
            example("3", "Uma só frase", "Uma só frase"),
        ]);
        for mode in [QaMode::PerSentence, QaMode::WholeContext] {
            let settings = QaSettings { mode, ..Default::default() };
            let t = translate_qa_dataset(&ds, &client("mock:identity"), &settings, &RunOptions::default()).unwrap();
            assert_eq!(t.output.dataset, ds, "{mode:?}");
            assert_eq!(t.report.kept, 3);
            assert_eq!(t.report.discarded(), 0);
            assert_eq!(t.meter.characters_submitted, t.emitted_characters);
        }
    }

    #[test]
    fn per_sentence_mode_translates_sentences_separately() {
        let ds = dataset(vec![example("1", "Um dois. Três quatro. Cinco seis.", "Três")]);
        let t = translate_qa_dataset(&ds, &client("mock:identity"), &QaSettings::default(), &RunOptions::default())
            .unwrap();
        // 3 sentences + question
        assert_eq!(t.meter.segments_translated, 4);
        let whole = QaSettings { mode: QaMode::WholeContext, ..Default::default() };
        let t = translate_qa_dataset(&ds, &client("mock:identity"), &whole, &RunOptions::default()).unwrap();
        assert_eq!(t.meter.segments_translated, 2);
    }

    #[test]
    fn dropped_delimiters_are_discarded() {
        let ds = dataset((0..20).map(|i| example(&i.to_string(), &format!("Texto {i} aqui."), "aqui")).collect());
        let t = translate_qa_dataset(&ds, &client("mock:delimiter-dropper:1.0:1"), &QaSettings::default(), &RunOptions::default())
            .unwrap();
        assert_eq!(t.report.kept, 0);
        assert!(t.report.is_balanced());
        assert!(t
            .report
            .discarded_by_reason
            .keys()
            .all(|r| matches!(r, DiscardReason::MissingStartDelimiter | DiscardReason::MissingEndDelimiter)));
        assert_eq!(t.report.wasted_characters, t.meter.characters_submitted);
    }

    #[test]
    fn collisions_and_unanswered_examples() {
        let mut unanswered = example("2", "Sem resposta.", "resposta");
        unanswered.answers.clear();
        let ds = dataset(vec![example("1", "tem <answer_end> dentro", "dentro"), unanswered.clone()]);
        let t = translate_qa_dataset(&ds, &client("mock:identity"), &QaSettings::default(), &RunOptions::default())
            .unwrap();
        assert_eq!(t.report.discarded_by_reason.get(&DiscardReason::DelimiterCollision), Some(&1));
        assert_eq!(t.output.dataset.examples(), &[unanswered]);
    }

    #[test]
    fn answers_are_trimmed_and_extra_answers_recorded() {
        let mut ex = example("1", "Fica em São Paulo hoje.", " São Paulo");
        ex.answers.push(Answer { text: "Paulo".into(), answer_start: 12 });
        let t = translate_qa_dataset(&dataset(vec![ex.clone()]), &client("mock:identity"), &QaSettings::default(), &RunOptions::default())
            .unwrap();
        let out = &t.output.dataset.examples()[0];
        assert_eq!(out.answers, vec![Answer { text: "São Paulo".into(), answer_start: 8 }]);
        assert_eq!(t.output.original_answers["1"], ex.answers);
    }

    #[test]
    fn dictionary_swap_output_is_aligned() {
        let ds = dataset(vec![example("1", "The country has 26 states. The capital is Brasília.", "26 states")]);
        let t = translate_qa_dataset(&ds, &client("mock:dictionary-swap:3"), &QaSettings::default(), &RunOptions::default())
            .unwrap();
        let out = &t.output.dataset.examples()[0];
        assert_eq!(out.answers[0].text, "26 estados");
        assert!(out.first_misaligned().is_none());
        assert!(out.context.contains("país"));
    }
}
