//! Translation cost and latency for the zero-shot, translate-train and
//! translate-infer scenarios.
//!
//! All arithmetic is unrounded; [`CostReport::rounded`] applies the 2-decimal
//! presentation rounding (ties to even).

mod reference;

pub use reference::{
    reference_rows, render_reference, CellCheck, CostField, KnownGap, PublishedCell, ReferenceRow, Tolerance,
};

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::MeterSnapshot;
use crate::formats::{NliPair, PassageCollection, QaDataset, QuerySet};
use crate::text::char_len;

/// Relative tolerance between a declared `examples_per_second` and
/// `batch_size / seconds_per_batch`.
pub const THROUGHPUT_TOLERANCE: f64 = 0.01;

/// Recurring costs are quoted per this many examples.
pub const PER_EXAMPLES: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum CostError {
    #[error("invalid pricing profile: {0}")]
    InvalidPricing(String),
    #[error("unknown pricing profile {0:?}")]
    UnknownProfile(String),
    #[error("invalid throughput profile: {0}")]
    InvalidThroughput(String),
    #[error("no batch latencies measured")]
    NoMeasurements,
    #[error("scenario {scenario} needs {statistic}")]
    MissingStatistic {
        scenario: Scenario,
        statistic: &'static str,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Price points, one per provider or cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingModel {
    /// USD per million characters.
    pub commercial_per_million: Vec<f64>,
    /// USD per GPU hour.
    pub gpu_per_hour: Vec<f64>,
}

const PAPER_2021: &str = include_str!("../../resources/pricing/paper-2021.json");

impl PricingModel {
    pub fn new(commercial_per_million: Vec<f64>, gpu_per_hour: Vec<f64>) -> Result<Self, CostError> {
        let model = Self {
            commercial_per_million,
            gpu_per_hour,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), CostError> {
        for (name, rates) in [
            ("commercial_per_million", &self.commercial_per_million),
            ("gpu_per_hour", &self.gpu_per_hour),
        ] {
            if rates.is_empty() {
                return Err(CostError::InvalidPricing(format!("{name} is empty")));
            }
            if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
                return Err(CostError::InvalidPricing(format!("{name} has non-positive rate {r}")));
            }
        }
        Ok(())
    }

    /// Three translation APIs at 20, 20 and 10 USD per million characters;
    /// two cloud GPUs at 2.48 and 3.06 USD per hour.
    pub fn paper_2021() -> Self {
        serde_json::from_str(PAPER_2021).expect("bundled profile")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, CostError> {
        let model: Self = serde_json::from_slice(bytes)?;
        model.validate()?;
        Ok(model)
    }

    /// A bundled profile name (`paper-2021`) or a path to a JSON file.
    pub fn load(name_or_path: &str) -> Result<Self, CostError> {
        if name_or_path == "paper-2021" {
            return Ok(Self::paper_2021());
        }
        let path = Path::new(name_or_path);
        if !path.exists() {
            return Err(CostError::UnknownProfile(name_or_path.to_string()));
        }
        Self::from_json(&std::fs::read(path)?)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// USD per million characters.
pub fn avg_commercial_rate(pricing: &PricingModel) -> f64 {
    mean(&pricing.commercial_per_million)
}

/// USD per GPU hour.
pub fn avg_gpu_rate(pricing: &PricingModel) -> f64 {
    mean(&pricing.gpu_per_hour)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputProfile {
    pub seconds_per_batch: f64,
    pub batch_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub examples_per_second: Option<f64>,
}

impl ThroughputProfile {
    pub fn new(seconds_per_batch: f64, batch_size: usize) -> Result<Self, CostError> {
        let profile = Self {
            seconds_per_batch,
            batch_size,
            examples_per_second: None,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if !(self.seconds_per_batch.is_finite() && self.seconds_per_batch > 0.0) {
            return Err(CostError::InvalidThroughput("seconds_per_batch must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(CostError::InvalidThroughput("batch_size must be positive".into()));
        }
        if let Some(eps) = self.examples_per_second {
            let implied = self.batch_size as f64 / self.seconds_per_batch;
            if !(eps > 0.0) || ((eps - implied) / implied).abs() > THROUGHPUT_TOLERANCE {
                return Err(CostError::InvalidThroughput(format!(
                    "examples_per_second {eps} disagrees with batch_size / seconds_per_batch = {implied}"
                )));
            }
        }
        Ok(())
    }

    /// Mean of measured per-batch latencies.
    pub fn from_latencies(latencies: &[f64], batch_size: usize) -> Result<Self, CostError> {
        if latencies.is_empty() {
            return Err(CostError::NoMeasurements);
        }
        Self::new(mean(latencies), batch_size)
    }

    pub fn from_meter(meter: &MeterSnapshot, batch_size: usize) -> Result<Self, CostError> {
        Self::from_latencies(&meter.batch_latencies, batch_size)
    }

    pub fn examples_per_second(&self) -> f64 {
        self.batch_size as f64 / self.seconds_per_batch
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_characters: u64,
    pub examples: u64,
    pub avg_chars_per_example: f64,
}

impl DatasetStats {
    pub fn new(total_characters: u64, examples: u64) -> Self {
        let avg_chars_per_example = match examples {
            0 => 0.0,
            n => total_characters as f64 / n as f64,
        };
        Self {
            total_characters,
            examples,
            avg_chars_per_example,
        }
    }

    /// Statistics quoted as a total and a rounded average. The example count
    /// is recovered as `round(total / avg)` and the quoted average is kept.
    pub fn from_total_and_average(total_characters: u64, avg_chars_per_example: f64) -> Self {
        let examples = if avg_chars_per_example > 0.0 {
            (total_characters as f64 / avg_chars_per_example).round() as u64
        } else {
            0
        };
        Self {
            total_characters,
            examples,
            avg_chars_per_example,
        }
    }

    pub fn from_lengths(lengths: impl IntoIterator<Item = usize>) -> Self {
        let (total, n) = lengths
            .into_iter()
            .fold((0u64, 0u64), |(t, n), l| (t + l as u64, n + 1));
        Self::new(total, n)
    }

    /// `avg * examples` is within half an average (one example's rounding)
    /// plus half a cent per example of `total`.
    pub fn is_consistent(&self) -> bool {
        if self.examples == 0 {
            return self.total_characters == 0 && self.avg_chars_per_example == 0.0;
        }
        let implied = self.avg_chars_per_example * self.examples as f64;
        (implied - self.total_characters as f64).abs()
            <= self.avg_chars_per_example / 2.0 + 0.005 * self.examples as f64
    }
}

/// Datasets whose translated fields can be measured.
pub trait Measurable {
    /// Characters sent for translation, per example.
    fn char_lengths(&self) -> Vec<usize>;
}

/// Context plus question.
impl Measurable for QaDataset {
    fn char_lengths(&self) -> Vec<usize> {
        self.examples()
            .iter()
            .map(|e| char_len(&e.context) + char_len(&e.question))
            .collect()
    }
}

/// Premise plus hypothesis.
impl Measurable for [NliPair] {
    fn char_lengths(&self) -> Vec<usize> {
        self.iter()
            .map(|p| char_len(&p.premise) + char_len(&p.hypothesis))
            .collect()
    }
}

impl Measurable for PassageCollection {
    fn char_lengths(&self) -> Vec<usize> {
        self.iter().map(|(_, t)| char_len(t)).collect()
    }
}

impl Measurable for QuerySet {
    fn char_lengths(&self) -> Vec<usize> {
        self.iter().map(|(_, t)| char_len(t)).collect()
    }
}

pub fn dataset_stats<D: Measurable + ?Sized>(dataset: &D) -> DatasetStats {
    DatasetStats::from_lengths(dataset.char_lengths())
}

/// USD to translate `chars` characters through the commercial APIs.
pub fn one_time_commercial(chars: u64, pricing: &PricingModel) -> f64 {
    chars as f64 * avg_commercial_rate(pricing) / 1e6
}

/// USD for `wall_hours` of GPU time.
pub fn one_time_opensource(wall_hours: f64, pricing: &PricingModel) -> f64 {
    wall_hours * avg_gpu_rate(pricing)
}

/// USD per `n` examples through the commercial APIs.
pub fn recurring_commercial(avg_chars_per_example: f64, pricing: &PricingModel, n: f64) -> f64 {
    avg_chars_per_example * n * avg_commercial_rate(pricing) / 1e6
}

/// USD of GPU time per `n` examples.
pub fn recurring_opensource(throughput: &ThroughputProfile, pricing: &PricingModel, n: f64) -> f64 {
    n / throughput.examples_per_second() / 3600.0 * avg_gpu_rate(pricing)
}

/// Seconds per batch.
pub fn added_latency(throughput: &ThroughputProfile) -> f64 {
    throughput.seconds_per_batch
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    #[default]
    ZeroShot,
    TranslateTrain,
    /// Translate every test input at inference time.
    TranslateInfer,
    /// Ranking: queries at inference time, the collection translated once.
    TranslateInferS1,
    /// Ranking: each query together with its top-k retrieved passages.
    TranslateInferS2,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::ZeroShot,
        Scenario::TranslateTrain,
        Scenario::TranslateInfer,
        Scenario::TranslateInferS1,
        Scenario::TranslateInferS2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::ZeroShot => "zero-shot",
            Scenario::TranslateTrain => "translate-train",
            Scenario::TranslateInfer => "translate-infer",
            Scenario::TranslateInferS1 => "translate-infer-s1",
            Scenario::TranslateInferS2 => "translate-infer-s2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn has_one_time(self) -> bool {
        matches!(self, Scenario::TranslateTrain | Scenario::TranslateInferS1)
    }

    pub fn has_recurring(self) -> bool {
        matches!(
            self,
            Scenario::TranslateInfer | Scenario::TranslateInferS1 | Scenario::TranslateInferS2
        )
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_rerank_depth() -> usize {
    1000
}

/// What a scenario needs to be priced. Unused fields may be left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostInputs {
    /// Training corpus translated once (translate-train).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<DatasetStats>,
    /// Examples translated at inference time (queries for ranking).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inference: Option<DatasetStats>,
    /// Passage collection (ranking strategies).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passages: Option<DatasetStats>,
    #[serde(default = "default_rerank_depth")]
    pub rerank_depth: usize,
    /// GPU hours to translate the one-time corpus. Derived from
    /// `throughput` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_hours: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput: Option<ThroughputProfile>,
}

impl Default for CostInputs {
    fn default() -> Self {
        Self {
            corpus: None,
            inference: None,
            passages: None,
            rerank_depth: default_rerank_depth(),
            wall_hours: None,
            throughput: None,
        }
    }
}

/// USD figures and seconds per batch; every field is non-negative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub scenario: Scenario,
    pub one_time_commercial: f64,
    pub one_time_opensource: f64,
    /// USD per 1,000 examples.
    pub recurring_commercial: f64,
    /// USD per 1,000 examples.
    pub recurring_opensource: f64,
    pub added_latency: f64,
}

impl CostReport {
    pub fn get(&self, field: CostField) -> f64 {
        match field {
            CostField::OneTimeCommercial => self.one_time_commercial,
            CostField::OneTimeOpenSource => self.one_time_opensource,
            CostField::RecurringCommercial => self.recurring_commercial,
            CostField::RecurringOpenSource => self.recurring_opensource,
            CostField::AddedLatency => self.added_latency,
        }
    }

    /// Applicable to this report's scenario.
    pub fn has(&self, field: CostField) -> bool {
        match field {
            CostField::OneTimeCommercial | CostField::OneTimeOpenSource => self.scenario.has_one_time(),
            _ => self.scenario.has_recurring(),
        }
    }

    pub fn rounded(&self) -> Self {
        Self {
            scenario: self.scenario,
            one_time_commercial: round2(self.one_time_commercial),
            one_time_opensource: round2(self.one_time_opensource),
            recurring_commercial: round2(self.recurring_commercial),
            recurring_opensource: round2(self.recurring_opensource),
            added_latency: round2(self.added_latency),
        }
    }
}

/// Two decimals, ties to even.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round_ties_even() / 100.0
}

fn need<T: Copy>(value: Option<T>, scenario: Scenario, statistic: &'static str) -> Result<T, CostError> {
    value.ok_or(CostError::MissingStatistic { scenario, statistic })
}

fn one_time(
    scenario: Scenario,
    stats: DatasetStats,
    wall_hours: Option<f64>,
    throughput: Option<ThroughputProfile>,
    pricing: &PricingModel,
) -> Result<(f64, f64), CostError> {
    let hours = match (wall_hours, throughput) {
        (Some(h), _) => h,
        (None, Some(tp)) => stats.examples as f64 / tp.examples_per_second() / 3600.0,
        (None, None) => need(None, scenario, "wall_hours or throughput")?,
    };
    Ok((
        one_time_commercial(stats.total_characters, pricing),
        one_time_opensource(hours, pricing),
    ))
}

pub fn build_report(
    scenario: Scenario,
    inputs: &CostInputs,
    pricing: &PricingModel,
) -> Result<CostReport, CostError> {
    let mut report = CostReport {
        scenario,
        ..Default::default()
    };
    let recurring = |per_example: f64, report: &mut CostReport| -> Result<(), CostError> {
        let tp = need(inputs.throughput, scenario, "throughput")?;
        report.recurring_commercial = recurring_commercial(per_example, pricing, PER_EXAMPLES);
        report.recurring_opensource = recurring_opensource(&tp, pricing, PER_EXAMPLES);
        report.added_latency = added_latency(&tp);
        Ok(())
    };
    match scenario {
        Scenario::ZeroShot => {}
        Scenario::TranslateTrain => {
            let corpus = need(inputs.corpus, scenario, "corpus")?;
            (report.one_time_commercial, report.one_time_opensource) =
                one_time(scenario, corpus, inputs.wall_hours, inputs.throughput, pricing)?;
        }
        Scenario::TranslateInfer => {
            let inference = need(inputs.inference, scenario, "inference")?;
            recurring(inference.avg_chars_per_example, &mut report)?;
        }
        Scenario::TranslateInferS1 => {
            let passages = need(inputs.passages.or(inputs.corpus), scenario, "passages")?;
            let wall_hours = need(inputs.wall_hours, scenario, "wall_hours")?;
            (report.one_time_commercial, report.one_time_opensource) =
                one_time(scenario, passages, Some(wall_hours), None, pricing)?;
            let queries = need(inputs.inference, scenario, "inference")?;
            recurring(queries.avg_chars_per_example, &mut report)?;
        }
        Scenario::TranslateInferS2 => {
            let queries = need(inputs.inference, scenario, "inference")?;
            let passages = need(inputs.passages, scenario, "passages")?;
            let per_query =
                queries.avg_chars_per_example + inputs.rerank_depth as f64 * passages.avg_chars_per_example;
            recurring(per_query, &mut report)?;
        }
    }
    Ok(report)
}

fn cell(report: &CostReport, field: CostField) -> String {
    if report.has(field) {
        format_usd(report.get(field))
    } else {
        "-".into()
    }
}

/// Two decimals with thousands separators.
pub fn format_usd(x: f64) -> String {
    let s = format!("{:.2}", round2(x));
    let (int, frac) = s.split_once('.').unwrap_or((&s, "00"));
    let (sign, digits) = int.strip_prefix('-').map_or(("", int), |d| ("-", d));
    let mut grouped = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(c);
    }
    format!("{sign}{grouped}.{frac}")
}

pub const TABLE_HEADER: [&str; 6] = [
    "Method",
    "One-time Comm. (USD)",
    "One-time Open-source (USD)",
    "Recurring Comm. (USD/1k)",
    "Recurring Open-source (USD/1k)",
    "Added latency (s/batch)",
];

/// Right-aligned text table, one row per labelled report.
pub fn render_table(rows: &[(String, CostReport)]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(label, r)| {
            let mut row = vec![label.clone()];
            row.extend(CostField::ALL.iter().map(|f| cell(r, *f)));
            row
        })
        .collect();
    let header: Vec<String> = TABLE_HEADER.iter().map(|s| s.to_string()).collect();
    align(&header, &body)
}

pub(crate) fn align(header: &[String], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| char_len(h)).collect();
    for row in body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(char_len(c));
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in body {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}
