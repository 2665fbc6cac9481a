#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crosslate::backend::{BackendClient, BackendConfig, BackendError, MockKind, MockTranslator, Translator};
use crosslate::formats::{Answer, NliLabel, NliPair, Provenance, QaDataset, QaExample};
use crosslate::spanmark::DelimiterPair;
use crosslate::text::char_len;

pub const WORDS: &[&str] = &[
    "the", "country", "has", "states", "river", "city", "capital", "largest", "people", "São", "Paulo", "água",
    "years", "first", "world", "book", "house", "Brasil", "language", "new", "of", "and", "in", "was", "26",
    "1990", "coração", "ação", "university", "who", "many",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(3..12);
    let mut words: Vec<String> = (0..n).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
    let mut first = words[0].chars();
    words[0] = first
        .next()
        .map(|f| f.to_uppercase().chain(first).collect())
        .unwrap_or_default();
    let end = *[".", ".", ".", "!", "?"].choose(rng).unwrap();
    format!("{}{end}", words.join(" "))
}

/// Contexts of 1 to 5 sentences; the answer is a random run of words, which
/// may cross sentence boundaries.
pub fn qa_example(id: usize, rng: &mut ChaCha8Rng) -> QaExample {
    let n = rng.gen_range(1..=5);
    let sentences: Vec<String> = (0..n).map(|_| sentence(rng)).collect();
    let context = sentences.join(if rng.gen_bool(0.1) { "  " } else { " " });
    let words: Vec<(usize, &str)> = context
        .split(' ')
        .scan(0usize, |pos, w| {
            let at = *pos;
            *pos += w.len() + 1;
            Some((at, w))
        })
        .filter(|(_, w)| !w.is_empty())
        .collect();
    let a = rng.gen_range(0..words.len());
    let b = (a + rng.gen_range(0..4)).min(words.len() - 1);
    let begin = words[a].0;
    let end = words[b].0 + words[b].1.len();
    let answer = context[begin..end].to_string();
    QaExample {
        id: format!("q{id}"),
        title: format!("article {}", id / 7),
        question: format!("Question {id} about {}?", WORDS.choose(rng).unwrap()),
        answers: vec![Answer {
            text: answer,
            answer_start: char_len(&context[..begin]),
        }],
        context,
    }
}

pub fn qa_dataset(n: usize, seed: u64) -> QaDataset {
    let mut r = rng(seed);
    let examples = (0..n).map(|i| qa_example(i, &mut r)).collect();
    QaDataset::new(
        Provenance {
            source: "synthetic".into(),
            language: "en".into(),
        },
        examples,
    )
    .unwrap()
}

pub fn nli_pairs(n: usize, seed: u64) -> Vec<NliPair> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| NliPair {
            id: i.to_string(),
            premise: sentence(&mut r),
            hypothesis: sentence(&mut r),
            label: *[NliLabel::Entailment, NliLabel::Neutral, NliLabel::Contradiction]
                .choose(&mut r)
                .unwrap(),
        })
        .collect()
}

pub fn config(endpoint: &str, batch: usize, in_flight: usize) -> BackendConfig {
    BackendConfig {
        endpoint: endpoint.into(),
        max_batch_size: batch,
        max_in_flight: in_flight,
        ..Default::default()
    }
}

pub fn client(endpoint: &str, batch: usize, in_flight: usize) -> BackendClient {
    BackendClient::from_config(config(endpoint, batch, in_flight), &DelimiterPair::default()).unwrap()
}

/// A mock that sleeps a random few milliseconds per call, so concurrent
/// batches finish out of order.
pub struct Jittery {
    inner: MockTranslator,
}

impl Translator for Jittery {
    fn translate(&self, texts: &[String]) -> Result<Vec<String>, BackendError> {
        std::thread::sleep(Duration::from_micros(rand::thread_rng().gen_range(0..3000)));
        self.inner.translate(texts)
    }

    fn describe(&self) -> String {
        self.inner.describe()
    }
}

pub fn jittery_client(kind: &str, batch: usize, in_flight: usize) -> BackendClient {
    let inner = MockTranslator::new(MockKind::parse(kind).unwrap(), DelimiterPair::default());
    BackendClient::new(Arc::new(Jittery { inner }), config(&format!("mock:{kind}"), batch, in_flight)).unwrap()
}

/// Characters of the units a QA job sends: the context sentences without
/// surrounding whitespace (the sentences an answer touches count as one),
/// the two delimiters, and the question.
pub fn qa_units_chars(ds: &QaDataset, whole_context: bool) -> u64 {
    let d = DelimiterPair::default();
    let delims = (char_len(d.start()) + char_len(d.end())) as u64;
    ds.examples()
        .iter()
        .map(|e| {
            let answer = e.answers.first().map(|a| {
                let b = e.context.char_indices().nth(a.answer_start).map_or(e.context.len(), |(b, _)| b);
                (b, b + a.text.len())
            });
            let pieces: Vec<(usize, usize)> = if whole_context {
                vec![(0, e.context.len())]
            } else {
                let mut pieces: Vec<(usize, usize)> = Vec::new();
                for s in crosslate::segment::split_sentences(&e.context).segments() {
                    let (start, end) = (s.start, s.start + s.text.len());
                    let joins = match (answer, pieces.last()) {
                        (Some((b, e)), Some(&(ps, pe))) => ps < e && pe > b && start < e,
                        _ => false,
                    };
                    if joins {
                        pieces.last_mut().unwrap().1 = end;
                    } else {
                        pieces.push((start, end));
                    }
                }
                pieces
            };
            let context: u64 = pieces.iter().map(|&(s, t)| char_len(e.context[s..t].trim()) as u64).sum();
            let marked = if answer.is_some() { delims } else { 0 };
            context + marked + char_len(&e.question) as u64
        })
        .sum()
}
