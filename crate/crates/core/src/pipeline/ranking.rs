use serde::{Deserialize, Serialize};

use super::engine::run_units;
use super::{DiscardReason, DiscardReport, PipelineError, RunOptions, Translated};
use crate::backend::BackendClient;
use crate::formats::{PassageCollection, QuerySet, RunFile};
use crate::text::char_len;

fn translate_entries<'a>(
    kind: &str,
    entries: impl Iterator<Item = (&'a str, &'a str)>,
    client: &BackendClient,
    opts: &RunOptions,
) -> Result<Translated<Vec<(String, String)>>, PipelineError> {
    let (ids, texts): (Vec<&str>, Vec<String>) = entries.map(|(id, t)| (id, t.to_string())).unzip();
    let results = run_units(kind, client, &texts, opts)?;
    let mut report = DiscardReport::new(ids.len());
    let mut output = Vec::with_capacity(ids.len());
    for ((id, text), translated) in ids.iter().zip(&texts).zip(results.outputs) {
        match translated {
            Some(t) => {
                report.keep();
                output.push((id.to_string(), t));
            }
            None => report.discard(DiscardReason::LengthMismatch, char_len(text) as u64),
        }
    }
    Ok(Translated {
        output,
        report,
        meter: results.meter,
        emitted_characters: results.emitted_characters,
        batches: results.batches,
    })
}

fn map_output<A, B>(t: Translated<A>, f: impl FnOnce(A) -> B) -> Translated<B> {
    Translated {
        output: f(t.output),
        report: t.report,
        meter: t.meter,
        emitted_characters: t.emitted_characters,
        batches: t.batches,
    }
}

/// Each passage is one unit, however many sentences it has.
pub fn translate_collection(
    collection: &PassageCollection,
    client: &BackendClient,
    opts: &RunOptions,
) -> Result<Translated<PassageCollection>, PipelineError> {
    let t = translate_entries("passages", collection.iter(), client, opts)?;
    Ok(map_output(t, |entries| entries.into_iter().collect()))
}

pub fn translate_queries(
    queries: &QuerySet,
    client: &BackendClient,
    opts: &RunOptions,
) -> Result<Translated<QuerySet>, PipelineError> {
    let t = translate_entries("queries", queries.iter(), client, opts)?;
    Ok(map_output(t, |entries| entries.into_iter().collect()))
}

/// Strategy 1: translate every query before any reranking happens. The
/// collection is translated once, separately, with [`translate_collection`].
pub fn run_strategy1(
    queries: &QuerySet,
    client: &BackendClient,
    opts: &RunOptions,
) -> Result<Translated<QuerySet>, PipelineError> {
    translate_queries(queries, client, opts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundlePassage {
    pub passage_id: String,
    pub rank: u32,
    pub text: String,
}

/// A translated query with its translated top-k passages, ready for a
/// reranker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bundle {
    pub query_id: String,
    pub query: String,
    pub passages: Vec<BundlePassage>,
    /// `|query| + sum of |passage|` over the passages sent, in source text.
    pub billed_characters: u64,
}

/// Strategy 2 for one query: translate it and its top `k` passages.
pub fn run_strategy2(
    query_id: &str,
    run: &RunFile,
    collection: &PassageCollection,
    queries: &QuerySet,
    client: &BackendClient,
    k: usize,
    opts: &RunOptions,
) -> Result<Translated<Bundle>, PipelineError> {
    let t = run_strategy2_many(&[query_id], run, collection, queries, client, k, opts)?;
    Ok(map_output(t, |mut bundles| bundles.remove(0)))
}

/// Strategy 2 for several queries as one job. A query whose units hit a
/// length mismatch is dropped from the output.
pub fn run_strategy2_many(
    query_ids: &[&str],
    run: &RunFile,
    collection: &PassageCollection,
    queries: &QuerySet,
    client: &BackendClient,
    k: usize,
    opts: &RunOptions,
) -> Result<Translated<Vec<Bundle>>, PipelineError> {
    let by_query = run.by_query();
    let mut units = Vec::new();
    let mut plans = Vec::with_capacity(query_ids.len());
    for qid in query_ids {
        let ranking = by_query
            .get(qid)
            .filter(|r| !r.is_empty())
            .ok_or_else(|| PipelineError::UnknownQuery(qid.to_string()))?;
        let query = queries
            .get(qid)
            .ok_or_else(|| PipelineError::UnknownQuery(qid.to_string()))?;
        let first = units.len();
        units.push(query.to_string());
        let mut ranked = Vec::new();
        for entry in ranking.iter().take(k) {
            let text = collection
                .get(&entry.passage_id)
                .ok_or_else(|| PipelineError::MissingPassageId(entry.passage_id.clone()))?;
            units.push(text.to_string());
            ranked.push((entry.passage_id.clone(), entry.rank));
        }
        plans.push((qid.to_string(), first, ranked));
    }

    let results = run_units("strategy2", client, &units, opts)?;
    let mut report = DiscardReport::new(plans.len());
    let mut bundles = Vec::with_capacity(plans.len());
    for (query_id, first, ranked) in plans {
        let span = first..first + 1 + ranked.len();
        let billed: u64 = units[span.clone()].iter().map(|u| char_len(u) as u64).sum();
        let outs = &results.outputs[span];
        if outs.iter().any(Option::is_none) {
            report.discard(DiscardReason::LengthMismatch, billed);
            continue;
        }
        let mut outs = outs.iter().flatten().cloned();
        let query = outs.next().unwrap_or_default();
        let passages = ranked
            .into_iter()
            .zip(outs)
            .map(|((passage_id, rank), text)| BundlePassage { passage_id, rank, text })
            .collect();
        report.keep();
        bundles.push(Bundle {
            query_id,
            query,
            passages,
            billed_characters: billed,
        });
    }
    Ok(Translated {
        output: bundles,
        report,
        meter: results.meter,
        emitted_characters: results.emitted_characters,
        batches: results.batches,
    })
}
