//! File-driven jobs: one [`JobConfig`] in, translated files plus
//! `discard_report.json`, `meter.json` and `provenance.json` out.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::backend::{BackendClient, BackendConfig, BackendError, MeterSnapshot};
use crate::costmodel::{
    build_report, dataset_stats, CostError, CostInputs, CostReport, DatasetStats, PricingModel, Scenario,
    ThroughputProfile,
};
use crate::formats::{
    parse_collection, parse_nli, parse_qa, parse_queries, parse_run, write_collection, write_nli, write_qa,
    write_queries, FormatError, NliLayout, NliSchema, QaParseOptions,
};
use crate::pipeline::{
    run_strategy2_many, translate_collection, translate_nli_dataset, translate_qa_dataset, translate_queries,
    DiscardReport, PipelineError, QaMode, QaSettings, RunOptions, Translated,
};
use crate::segment::Segmenter;
use crate::spanmark::DelimiterPair;

pub const JOB_FILE: &str = "job.json";
pub const DISCARD_REPORT_FILE: &str = "discard_report.json";
pub const METER_FILE: &str = "meter.json";
pub const PROVENANCE_FILE: &str = "provenance.json";
pub const STATUS_FILE: &str = "status.json";
pub const COST_FILE: &str = "cost_report.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Qa,
    Nli,
    Passages,
    Queries,
    Strategy2,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Qa => "qa",
            Task::Nli => "nli",
            Task::Passages => "passages",
            Task::Queries => "queries",
            Task::Strategy2 => "strategy2",
        }
    }
}

fn default_depth() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub task: Task,
    /// Dataset to translate (qa, nli, passages, queries).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Strategy 2: run file, collection and query set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collection: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries: Option<PathBuf>,
    /// Strategy 2 queries to bundle; empty means every query in the run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub query_ids: Vec<String>,
    #[serde(default = "default_depth")]
    pub rerank_depth: usize,
    pub output: PathBuf,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub delimiters: DelimiterPair,
    #[serde(default)]
    pub qa_mode: QaMode,
    #[serde(default)]
    pub nli_schema: NliSchema,
    /// Abbreviation list, one per line, replacing the built-in one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abbreviations: Option<PathBuf>,
    /// Defaults to `<output>/checkpoint.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    /// Pricing profile name or file; when set a cost report is written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pricing_profile: Option<String>,
    /// Throughput used for the cost report instead of the measured one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput: Option<ThroughputProfile>,
}

#[derive(Debug, Error)]
pub enum JobError {
    #[error("{0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: FormatError },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl JobError {
    /// 1 for configuration problems, 2 for jobs that started and failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            JobError::Invalid(_) | JobError::Backend(_) | JobError::Cost(_) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> JobError + '_ {
    move |source| JobError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read(path: &Path) -> Result<Vec<u8>, JobError> {
    fs::read(path).map_err(io_err(path))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), JobError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), JobError> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    write(path, &bytes)
}

fn input_err(path: &Path) -> impl FnOnce(FormatError) -> JobError + '_ {
    move |source| JobError::Input {
        path: path.to_path_buf(),
        source,
    }
}

impl JobConfig {
    pub fn new(task: Task, output: impl Into<PathBuf>) -> Self {
        Self {
            task,
            input: None,
            run: None,
            collection: None,
            queries: None,
            query_ids: Vec::new(),
            rerank_depth: default_depth(),
            output: output.into(),
            backend: BackendConfig::default(),
            delimiters: DelimiterPair::default(),
            qa_mode: QaMode::default(),
            nli_schema: NliSchema::default(),
            abbreviations: None,
            checkpoint: None,
            pricing_profile: None,
            throughput: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, JobError> {
        serde_json::from_slice(&read(path)?)
            .map_err(|e| JobError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.output.join(CHECKPOINT_FILE))
    }

    /// Referenced files exist and the task has what it needs.
    pub fn validate(&self) -> Result<(), JobError> {
        let required: &[(&str, &Option<PathBuf>)] = match self.task {
            Task::Strategy2 => &[
                ("--run", &self.run),
                ("--collection", &self.collection),
                ("--queries", &self.queries),
            ],
            _ => &[("--input", &self.input)],
        };
        for (flag, path) in required {
            match path {
                None => return Err(JobError::Invalid(format!("{} requires {flag}", self.task.name()))),
                Some(p) if !p.is_file() => {
                    return Err(JobError::Invalid(format!("{flag}: {} does not exist", p.display())))
                }
                Some(_) => {}
            }
        }
        if let Some(p) = self.abbreviations.as_ref().filter(|p| !p.is_file()) {
            return Err(JobError::Invalid(format!("abbreviations: {} does not exist", p.display())));
        }
        if self.task == Task::Strategy2 && self.rerank_depth == 0 {
            return Err(JobError::Invalid("--depth must be at least 1".into()));
        }
        self.backend.validate()?;
        if let Some(tp) = &self.throughput {
            tp.validate()?;
        }
        Ok(())
    }

    /// Paths made absolute so the captured config runs from anywhere.
    pub fn resolved(&self) -> Self {
        let abs_path = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
        let abs = |p: &Option<PathBuf>| p.as_deref().map(abs_path);
        Self {
            output: abs_path(&self.output),
            checkpoint: abs(&self.checkpoint),
            input: abs(&self.input),
            run: abs(&self.run),
            collection: abs(&self.collection),
            queries: abs(&self.queries),
            abbreviations: abs(&self.abbreviations),
            ..self.clone()
        }
    }
}

/// What a finished job produced.
#[derive(Debug, Clone, Serialize)]
pub struct JobSummary {
    pub task: Task,
    pub output: PathBuf,
    pub report: DiscardReport,
    pub meter: MeterSnapshot,
    pub batches: usize,
    pub files: Vec<String>,
}

struct Written {
    report: DiscardReport,
    meter: MeterSnapshot,
    batches: usize,
    files: Vec<String>,
    cost_inputs: CostInputs,
    scenario: Scenario,
    provenance: serde_json::Value,
}

fn finish<T>(t: &Translated<T>, files: Vec<String>, inputs: CostInputs, scenario: Scenario) -> Written {
    Written {
        report: t.report.clone(),
        meter: t.meter.clone(),
        batches: t.batches,
        files,
        cost_inputs: inputs,
        scenario,
        provenance: json!({}),
    }
}

/// Runs a job, writing everything into `config.output`. With `resume`, an
/// existing checkpoint for the same job is continued.
pub fn run_job(config: &JobConfig, resume: bool, stop_after_batches: Option<usize>) -> Result<JobSummary, JobError> {
    config.validate()?;
    let config = config.resolved();
    let out = &config.output;
    fs::create_dir_all(out).map_err(io_err(out))?;
    write_json(&out.join(JOB_FILE), &config)?;
    let _ = fs::remove_file(out.join(STATUS_FILE));

    let client = BackendClient::from_config(config.backend.clone(), &config.delimiters)?;
    let opts = RunOptions {
        checkpoint: Some(config.checkpoint_path()),
        resume,
        stop_after_batches,
        job: Some(serde_json::to_value(&config).expect("serializable")),
    };

    let written = match execute(&config, &client, &opts) {
        Ok(w) => w,
        Err(err) => {
            if let Some(meter) = err_meter(&err) {
                write_json(&out.join(METER_FILE), meter)?;
            }
            let (completed, total) = match &err {
                JobError::Pipeline(PipelineError::Interrupted {
                    completed_batches,
                    total_batches,
                    ..
                }) => (Some(*completed_batches), Some(*total_batches)),
                JobError::Pipeline(PipelineError::Backend { completed_batches, .. }) => {
                    (Some(*completed_batches), None)
                }
                _ => (None, None),
            };
            write_json(
                &out.join(STATUS_FILE),
                &json!({
                    "status": "failed",
                    "error": err.to_string(),
                    "completed_batches": completed,
                    "total_batches": total,
                    "checkpoint": config.checkpoint_path(),
                }),
            )?;
            return Err(err);
        }
    };

    write_json(&out.join(DISCARD_REPORT_FILE), &written.report)?;
    write_json(&out.join(METER_FILE), &written.meter)?;
    let mut provenance = json!({
        "tool": concat!("crosslate ", env!("CARGO_PKG_VERSION")),
        "task": config.task,
        "backend": client.describe(),
        "source_lang": config.backend.source_lang,
        "target_lang": config.backend.target_lang,
        "batch_size": config.backend.max_batch_size,
        "delimiters": config.delimiters,
        "inputs": {
            "input": config.input,
            "run": config.run,
            "collection": config.collection,
            "queries": config.queries,
        },
        "batches": written.batches,
        "outputs": written.files,
    });
    if let (Some(p), Some(extra)) = (provenance.as_object_mut(), written.provenance.as_object()) {
        p.extend(extra.clone());
    }
    write_json(&out.join(PROVENANCE_FILE), &provenance)?;

    let mut files = written.files.clone();
    if let Some(profile) = &config.pricing_profile {
        let pricing = PricingModel::load(profile)?;
        let mut inputs = written.cost_inputs.clone();
        inputs.throughput = config
            .throughput
            .or_else(|| ThroughputProfile::from_meter(&written.meter, config.backend.max_batch_size).ok());
        let reports: Vec<CostReport> = [Scenario::TranslateTrain, written.scenario]
            .into_iter()
            .filter_map(|s| build_report(s, &inputs, &pricing).ok())
            .collect();
        write_json(&out.join(COST_FILE), &json!({"inputs": inputs, "reports": reports}))?;
        files.push(COST_FILE.into());
    }
    files.extend([DISCARD_REPORT_FILE, METER_FILE, PROVENANCE_FILE, JOB_FILE].map(String::from));

    Ok(JobSummary {
        task: config.task,
        output: out.clone(),
        report: written.report,
        meter: written.meter,
        batches: written.batches,
        files,
    })
}

/// Re-runs the job captured in `output_dir`, continuing from its checkpoint.
pub fn resume_job(output_dir: &Path, stop_after_batches: Option<usize>) -> Result<JobSummary, JobError> {
    let job_file = output_dir.join(JOB_FILE);
    if !job_file.is_file() {
        return Err(JobError::Invalid(format!("{} has no {JOB_FILE}", output_dir.display())));
    }
    let config = JobConfig::load(&job_file)?;
    run_job(&config, true, stop_after_batches)
}

fn err_meter(err: &JobError) -> Option<&MeterSnapshot> {
    match err {
        JobError::Pipeline(p) => p.meter(),
        _ => None,
    }
}

fn execute(config: &JobConfig, client: &BackendClient, opts: &RunOptions) -> Result<Written, JobError> {
    let out = &config.output;
    match config.task {
        Task::Qa => {
            let path = config.input.as_deref().expect("validated");
            let parse_opts = QaParseOptions {
                require_answers: false,
                language: Some(config.backend.source_lang.clone()),
                ..Default::default()
            };
            let parsed = parse_qa(&read(path)?, &parse_opts).map_err(input_err(path))?;
            let segmenter = match &config.abbreviations {
                Some(p) => Segmenter::from_list(&String::from_utf8_lossy(&read(p)?)),
                None => Segmenter::default(),
            };
            let settings = QaSettings {
                delimiters: config.delimiters.clone(),
                mode: config.qa_mode,
                segmenter,
            };
            let stats = dataset_stats(&parsed.dataset);
            let t = translate_qa_dataset(&parsed.dataset, client, &settings, opts)?;
            write(&out.join("translated.json"), &write_qa(&t.output.dataset))?;
            let mut files = vec!["translated.json".to_string()];
            if !t.output.original_answers.is_empty() {
                write_json(&out.join("original_answers.json"), &t.output.original_answers)?;
                files.push("original_answers.json".into());
            }
            let mut w = finish(&t, files, one_unit_inputs(stats, &t.meter), Scenario::TranslateInfer);
            w.provenance = json!({
                "qa_mode": config.qa_mode,
                "parse": {
                    "rejected": parsed.rejected.iter().map(|r| json!({"id": r.id, "reason": format!("{:?}", r.reason)})).collect::<Vec<_>>(),
                    "repaired": parsed.repaired,
                },
            });
            Ok(w)
        }
        Task::Nli => {
            let path = config.input.as_deref().expect("validated");
            let pairs = parse_nli(&read(path)?, &config.nli_schema).map_err(input_err(path))?;
            let stats = dataset_stats(&pairs[..]);
            let t = translate_nli_dataset(&pairs, client, opts)?;
            let name = match config.nli_schema.layout {
                NliLayout::Tsv { .. } => "translated.tsv",
                NliLayout::Jsonl { .. } => "translated.jsonl",
            };
            let bytes = write_nli(&t.output, &config.nli_schema).map_err(|source| JobError::Input {
                path: out.join(name),
                source,
            })?;
            write(&out.join(name), &bytes)?;
            Ok(finish(&t, vec![name.into()], one_unit_inputs(stats, &t.meter), Scenario::TranslateInfer))
        }
        Task::Passages => {
            let path = config.input.as_deref().expect("validated");
            let collection = parse_collection(&read(path)?).map_err(input_err(path))?;
            let stats = dataset_stats(&collection);
            let t = translate_collection(&collection, client, opts)?;
            let bytes = write_collection(&t.output).map_err(input_err(path))?;
            write(&out.join("collection.tsv"), &bytes)?;
            Ok(finish(&t, vec!["collection.tsv".into()], one_unit_inputs(stats, &t.meter), Scenario::TranslateInfer))
        }
        Task::Queries => {
            let path = config.input.as_deref().expect("validated");
            let queries = parse_queries(&read(path)?).map_err(input_err(path))?;
            let stats = dataset_stats(&queries);
            let t = translate_queries(&queries, client, opts)?;
            let bytes = write_queries(&t.output).map_err(input_err(path))?;
            write(&out.join("queries.tsv"), &bytes)?;
            Ok(finish(&t, vec!["queries.tsv".into()], one_unit_inputs(stats, &t.meter), Scenario::TranslateInfer))
        }
        Task::Strategy2 => {
            let run_path = config.run.as_deref().expect("validated");
            let (run, warnings) = parse_run(&read(run_path)?).map_err(input_err(run_path))?;
            for w in &warnings {
                log::warn!("{}: {w:?}", run_path.display());
            }
            let c_path = config.collection.as_deref().expect("validated");
            let collection = parse_collection(&read(c_path)?).map_err(input_err(c_path))?;
            let q_path = config.queries.as_deref().expect("validated");
            let queries = parse_queries(&read(q_path)?).map_err(input_err(q_path))?;
            let ids: Vec<&str> = if config.query_ids.is_empty() {
                run.query_ids()
            } else {
                config.query_ids.iter().map(String::as_str).collect()
            };
            let t = run_strategy2_many(&ids, &run, &collection, &queries, client, config.rerank_depth, opts)?;
            let mut bytes = Vec::new();
            for bundle in &t.output {
                serde_json::to_writer(&mut bytes, bundle).expect("serializable");
                bytes.push(b'\n');
            }
            write(&out.join("bundles.jsonl"), &bytes)?;
            let billed = DatasetStats::from_lengths(t.output.iter().map(|b| b.billed_characters as usize));
            let inputs = CostInputs {
                inference: Some(billed),
                ..Default::default()
            };
            Ok(finish(&t, vec!["bundles.jsonl".into()], inputs, Scenario::TranslateInfer))
        }
    }
}

/// The job's dataset priced both as a one-time corpus and as inference
/// traffic.
fn one_unit_inputs(stats: DatasetStats, meter: &MeterSnapshot) -> CostInputs {
    CostInputs {
        corpus: Some(stats),
        inference: Some(stats),
        wall_hours: Some(meter.wall_seconds / 3600.0),
        ..Default::default()
    }
}
