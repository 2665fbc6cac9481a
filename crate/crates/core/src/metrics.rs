//! Exact match and token F1 for extractive QA, accuracy for NLI, MRR@k for
//! passage ranking.
//!
//! Every metric lies in `[0, 1]` and corpus figures are means of per-example
//! figures.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{NliLabel, NliPair, QaDataset, Qrels, RunFile};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("prediction for unknown example {0:?}")]
    UnknownExampleId(String),
    #[error("{predicted} predictions for {gold} gold labels")]
    LengthMismatch { predicted: usize, gold: usize },
}

/// Example id to predicted answer text.
pub type QaPredictions = BTreeMap<String, String>;

/// Answer normalization: lowercase, drop punctuation, drop articles,
/// collapse whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalizer {
    pub articles: BTreeSet<String>,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self::english()
    }
}

impl Normalizer {
    pub fn with_articles<I, S>(articles: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            articles: articles.into_iter().map(|a| a.into().to_lowercase()).collect(),
        }
    }

    pub fn english() -> Self {
        Self::with_articles(["a", "an", "the"])
    }

    pub fn portuguese() -> Self {
        Self::with_articles(["o", "a", "os", "as", "um", "uma", "uns", "umas"])
    }

    /// Keeps articles.
    pub fn none() -> Self {
        Self::with_articles(Vec::<String>::new())
    }

    /// `en` and `pt` (with any region suffix); other languages keep articles.
    pub fn for_language(code: &str) -> Self {
        let base = code.split(['-', '_']).next().unwrap_or_default().to_ascii_lowercase();
        match base.as_str() {
            "en" => Self::english(),
            "pt" => Self::portuguese(),
            _ => Self::none(),
        }
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        let cleaned: String = text
            .to_lowercase()
            .chars()
            .filter(|c| c.is_alphanumeric() || c.is_whitespace())
            .collect();
        cleaned
            .split_whitespace()
            .filter(|t| !self.articles.contains(*t))
            .map(str::to_string)
            .collect()
    }

    pub fn normalize(&self, text: &str) -> String {
        self.tokens(text).join(" ")
    }
}

fn golds_or_empty<'a>(golds: &'a [&'a str]) -> &'a [&'a str] {
    if golds.is_empty() {
        &[""]
    } else {
        golds
    }
}

/// 1 when the normalized prediction equals any normalized gold. An empty
/// gold list counts as a single empty answer.
pub fn exact_match(prediction: &str, golds: &[&str], norm: &Normalizer) -> f64 {
    let p = norm.normalize(prediction);
    let hit = golds_or_empty(golds).iter().any(|g| norm.normalize(g) == p);
    if hit {
        1.0
    } else {
        0.0
    }
}

/// F1 of two token bags. Two empty bags score 1.
pub fn bag_f1<S: AsRef<str>>(prediction: &[S], gold: &[S]) -> f64 {
    if prediction.is_empty() && gold.is_empty() {
        return 1.0;
    }
    let mut counts: HashMap<&str, i64> = HashMap::new();
    for t in gold {
        *counts.entry(t.as_ref()).or_default() += 1;
    }
    let mut common = 0usize;
    for t in prediction {
        if let Some(c) = counts.get_mut(t.as_ref()).filter(|c| **c > 0) {
            *c -= 1;
            common += 1;
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / prediction.len() as f64;
    let recall = common as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best bag-of-tokens F1 against any gold.
pub fn token_f1(prediction: &str, golds: &[&str], norm: &Normalizer) -> f64 {
    let p = norm.tokens(prediction);
    golds_or_empty(golds)
        .iter()
        .map(|g| bag_f1(&p, &norm.tokens(g)))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QaScores {
    pub exact_match: f64,
    pub f1: f64,
    pub examples: usize,
    /// Examples with no prediction; they score 0.
    pub missing: usize,
}

/// Corpus EM and F1 over every example of `dataset`.
pub fn qa_scores(dataset: &QaDataset, predictions: &QaPredictions, norm: &Normalizer) -> Result<QaScores, MetricError> {
    if let Some(id) = predictions.keys().find(|id| dataset.get(id).is_none()) {
        return Err(MetricError::UnknownExampleId(id.clone()));
    }
    let (mut em, mut f1, mut missing) = (0.0, 0.0, 0);
    for ex in dataset.examples() {
        let golds: Vec<&str> = ex.answers.iter().map(|a| a.text.as_str()).collect();
        match predictions.get(&ex.id) {
            Some(p) => {
                em += exact_match(p, &golds, norm);
                f1 += token_f1(p, &golds, norm);
            }
            None => missing += 1,
        }
    }
    let n = dataset.len();
    let mean = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };
    Ok(QaScores {
        exact_match: mean(em),
        f1: mean(f1),
        examples: n,
        missing,
    })
}

/// Fraction of positions where the labels agree; 0 for no labels.
pub fn accuracy(predicted: &[NliLabel], gold: &[NliLabel]) -> Result<f64, MetricError> {
    if predicted.len() != gold.len() {
        return Err(MetricError::LengthMismatch {
            predicted: predicted.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Ok(0.0);
    }
    let correct = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(correct as f64 / gold.len() as f64)
}

/// Accuracy keyed by pair id. Pairs without a prediction count as wrong.
pub fn accuracy_by_id(predicted: &BTreeMap<String, NliLabel>, gold: &[NliPair]) -> Result<f64, MetricError> {
    let ids: BTreeSet<&str> = gold.iter().map(|p| p.id.as_str()).collect();
    if let Some(id) = predicted.keys().find(|id| !ids.contains(id.as_str())) {
        return Err(MetricError::UnknownExampleId(id.clone()));
    }
    if gold.is_empty() {
        return Ok(0.0);
    }
    let correct = gold
        .iter()
        .filter(|p| predicted.get(&p.id) == Some(&p.label))
        .count();
    Ok(correct as f64 / gold.len() as f64)
}

/// Mean over judged queries of `1 / rank` of the first relevant passage with
/// rank ≤ `k`, 0 when there is none. Queries with relevant passages but no
/// run entries score 0; queries with no relevant passages are not judged.
pub fn mrr_at_k(run: &RunFile, qrels: &Qrels, k: u32) -> f64 {
    let by_query = run.by_query();
    let judged: Vec<(&String, &BTreeSet<String>)> = qrels.iter().filter(|(_, rel)| !rel.is_empty()).collect();
    if judged.is_empty() {
        return 0.0;
    }
    let total: f64 = judged
        .iter()
        .map(|(qid, relevant)| {
            by_query
                .get(qid.as_str())
                .and_then(|ranking| {
                    ranking
                        .iter()
                        .take_while(|e| e.rank <= k)
                        .find(|e| relevant.contains(&e.passage_id))
                })
                .map_or(0.0, |e| 1.0 / f64::from(e.rank))
        })
        .sum();
    total / judged.len() as f64
}
