use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crosslate::costmodel::{
    build_report, dataset_stats, render_reference, render_table, CostInputs, DatasetStats, PricingModel, Scenario,
    ThroughputProfile,
};
use crosslate::formats::{
    parse_collection, parse_labels, parse_nli, parse_qa, parse_qrels, parse_queries, parse_run, NliSchema,
    QaParseOptions,
};
use crosslate::job::{resume_job, run_job, JobConfig, JobError, JobSummary, Task};
use crosslate::metrics::{accuracy_by_id, mrr_at_k, qa_scores, Normalizer, QaPredictions};
use crosslate::pipeline::QaMode;
use crosslate::spanmark::DelimiterPair;

#[derive(Parser)]
#[command(name = "crosslate", version, about = "Translate QA, NLI and ranking datasets; price and score them")]
struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate a SQuAD-format dataset, carrying answer spans through.
    TranslateQa {
        #[command(flatten)]
        job: JobFlags,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Translate premise/hypothesis pairs.
    TranslateNli {
        #[command(flatten)]
        job: JobFlags,
        /// JSON NLI schema (default: premise, hypothesis, label TSV).
        #[arg(long)]
        nli_schema: Option<PathBuf>,
    },
    /// Translate a passage collection (`id<TAB>text`).
    TranslatePassages {
        #[command(flatten)]
        job: JobFlags,
    },
    /// Translate a query set (`id<TAB>text`).
    TranslateQueries {
        #[command(flatten)]
        job: JobFlags,
    },
    /// Translate queries with their top-k retrieved passages.
    Strategy2 {
        #[command(flatten)]
        job: JobFlags,
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long)]
        collection: Option<PathBuf>,
        #[arg(long)]
        queries: Option<PathBuf>,
        /// Query to bundle; repeatable. Default: every query in the run.
        #[arg(long = "query-id")]
        query_ids: Vec<String>,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Character statistics of a dataset, as JSON.
    Stats {
        #[arg(long, value_enum)]
        task: StatsTask,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        nli_schema: Option<PathBuf>,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// One-time cost, recurring cost and added latency of a scenario.
    CostReport(CostArgs),
    /// Score predictions: EM/F1, accuracy or MRR@k.
    Score(ScoreArgs),
    /// Continue an interrupted job from its output directory.
    Resume {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, hide = true)]
        stop_after_batches: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    PerSentence,
    WholeContext,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatsTask {
    Qa,
    Nli,
    Passages,
    Queries,
}

#[derive(Args)]
struct JobFlags {
    /// JobConfig JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// `http(s)://host:port` or `mock:<kind>[:params]`.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    source_lang: Option<String>,
    #[arg(long)]
    target_lang: Option<String>,
    /// Segments per request [default: 32].
    #[arg(long)]
    batch_size: Option<usize>,
    /// Batches in flight at once [default: 4].
    #[arg(long)]
    in_flight: Option<usize>,
    /// Delimiter pair as `START,END`.
    #[arg(long)]
    delims: Option<String>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Pricing profile name or JSON file; writes cost_report.json.
    #[arg(long)]
    profile: Option<String>,
    /// Continue from the checkpoint if there is one.
    #[arg(long)]
    resume: bool,
    /// Abbreviation list for sentence splitting.
    #[arg(long)]
    abbreviations: Option<PathBuf>,
    #[arg(long, hide = true)]
    stop_after_batches: Option<usize>,
}

#[derive(Args)]
struct CostArgs {
    /// Pricing profile name or JSON file.
    #[arg(long, default_value = "paper-2021")]
    profile: String,
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// DatasetStats or CostInputs JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// DatasetStats JSON of inference-time examples (queries for ranking).
    #[arg(long)]
    inference_stats: Option<PathBuf>,
    /// DatasetStats JSON of the passage collection.
    #[arg(long)]
    passage_stats: Option<PathBuf>,
    #[arg(long)]
    wall_hours: Option<f64>,
    #[arg(long)]
    seconds_per_batch: Option<f64>,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long)]
    rerank_depth: Option<usize>,
    /// Print the reference cost table with every published cell checked.
    #[arg(long, conflicts_with = "scenario")]
    reference: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    ZeroShot,
    TranslateTrain,
    TranslateInfer,
    TranslateInferS1,
    TranslateInferS2,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::ZeroShot => Scenario::ZeroShot,
            ScenarioArg::TranslateTrain => Scenario::TranslateTrain,
            ScenarioArg::TranslateInfer => Scenario::TranslateInfer,
            ScenarioArg::TranslateInferS1 => Scenario::TranslateInferS1,
            ScenarioArg::TranslateInferS2 => Scenario::TranslateInferS2,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long, value_enum)]
    task: ScoreTask,
    /// Gold SQuAD JSON (qa) or NLI file (nli).
    #[arg(long)]
    gold: Option<PathBuf>,
    /// JSON `{id: answer}` (qa) or TSV `id<TAB>label` (nli).
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long)]
    nli_schema: Option<PathBuf>,
    /// Article list for normalization: `en`, `pt` or any other code for none.
    #[arg(long, default_value = "en")]
    language: String,
    /// Comma-separated articles, replacing the language's list.
    #[arg(long)]
    articles: Option<String>,
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScoreTask {
    Qa,
    Nli,
    Ranking,
}

/// Exit 1 with a message naming the flag.
struct Usage(String);

enum Failure {
    Usage(String),
    Job(JobError),
    Other(String),
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u.0)
    }
}

impl From<JobError> for Failure {
    fn from(e: JobError) -> Self {
        Failure::Job(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Job(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::TranslateQa { job, mode } => {
            let mut config = job_config(Task::Qa, &job)?;
            if let Some(mode) = mode {
                config.qa_mode = match mode {
                    ModeArg::PerSentence => QaMode::PerSentence,
                    ModeArg::WholeContext => QaMode::WholeContext,
                };
            }
            run(&config, &job)
        }
        Command::TranslateNli { job, nli_schema } => {
            let mut config = job_config(Task::Nli, &job)?;
            if let Some(path) = nli_schema {
                config.nli_schema = load_schema(&path, "--nli-schema")?;
            }
            run(&config, &job)
        }
        Command::TranslatePassages { job } => run(&job_config(Task::Passages, &job)?, &job),
        Command::TranslateQueries { job } => run(&job_config(Task::Queries, &job)?, &job),
        Command::Strategy2 {
            job,
            run: run_file,
            collection,
            queries,
            query_ids,
            depth,
        } => {
            let mut config = job_config(Task::Strategy2, &job)?;
            config.run = run_file.or(config.run);
            config.collection = collection.or(config.collection);
            config.queries = queries.or(config.queries);
            if !query_ids.is_empty() {
                config.query_ids = query_ids;
            }
            if let Some(d) = depth {
                config.rerank_depth = d;
            }
            run(&config, &job)
        }
        Command::Stats {
            task,
            input,
            nli_schema,
            output,
        } => {
            let bytes = read(&input, "--input")?;
            let fail = |e: crosslate::formats::FormatError| Failure::Other(format!("{}: {e}", input.display()));
            let (name, stats) = match task {
                StatsTask::Qa => {
                    let opts = QaParseOptions {
                        require_answers: false,
                        ..Default::default()
                    };
                    ("qa", dataset_stats(&parse_qa(&bytes, &opts).map_err(fail)?.dataset))
                }
                StatsTask::Nli => {
                    let schema = match &nli_schema {
                        Some(p) => load_schema(p, "--nli-schema")?,
                        None => NliSchema::default(),
                    };
                    ("nli", dataset_stats(&parse_nli(&bytes, &schema).map_err(fail)?[..]))
                }
                StatsTask::Passages => ("passages", dataset_stats(&parse_collection(&bytes).map_err(fail)?)),
                StatsTask::Queries => ("queries", dataset_stats(&parse_queries(&bytes).map_err(fail)?)),
            };
            let value = json!({
                "task": name,
                "total_characters": stats.total_characters,
                "examples": stats.examples,
                "avg_chars_per_example": stats.avg_chars_per_example,
            });
            emit(&value, output.as_deref())
        }
        Command::CostReport(args) => cost_report(args),
        Command::Score(args) => score(args),
        Command::Resume {
            output,
            stop_after_batches,
        } => {
            let summary = resume_job(&output, stop_after_batches)?;
            print_summary(&summary)
        }
    }
}

fn read(path: &Path, flag: &str) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Usage(format!("{flag}: {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, flag: &str) -> Result<T, Failure> {
    serde_json::from_slice(&read(path, flag)?)
        .map_err(|e| Failure::Usage(format!("{flag}: {}: {e}", path.display())))
}

fn load_schema(path: &Path, flag: &str) -> Result<NliSchema, Failure> {
    read_json(path, flag)
}

fn emit(value: &Value, output: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Other(format!("{}: {e}", p.display()))),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn job_config(task: Task, flags: &JobFlags) -> Result<JobConfig, Failure> {
    let mut config = match &flags.config {
        Some(path) => {
            let config = JobConfig::load(path).map_err(|e| Failure::Usage(format!("--config: {e}")))?;
            if config.task != task {
                return Err(Usage(format!(
                    "--config: {} describes a {} job, not {}",
                    path.display(),
                    config.task.name(),
                    task.name()
                ))
                .into());
            }
            config
        }
        None => {
            let output = flags
                .output
                .clone()
                .ok_or_else(|| Usage("the following required argument was not provided: --output".into()))?;
            JobConfig::new(task, output)
        }
    };
    if let Some(o) = &flags.output {
        config.output = o.clone();
    }
    if let Some(i) = &flags.input {
        config.input = Some(i.clone());
    }
    let backend = &mut config.backend;
    if let Some(b) = &flags.backend {
        backend.endpoint = b.clone();
    }
    if let Some(l) = &flags.source_lang {
        backend.source_lang = l.clone();
    }
    if let Some(l) = &flags.target_lang {
        backend.target_lang = l.clone();
    }
    if let Some(n) = flags.batch_size {
        if n == 0 {
            return Err(Usage("--batch-size must be at least 1".into()).into());
        }
        backend.max_batch_size = n;
    }
    if let Some(k) = flags.in_flight {
        if k == 0 {
            return Err(Usage("--in-flight must be at least 1".into()).into());
        }
        backend.max_in_flight = k;
    }
    if let Some(d) = &flags.delims {
        config.delimiters = DelimiterPair::parse(d).map_err(|e| Usage(format!("--delims: {e}")))?;
    }
    if let Some(c) = &flags.checkpoint {
        config.checkpoint = Some(c.clone());
    }
    if let Some(p) = &flags.profile {
        config.pricing_profile = Some(p.clone());
    }
    if let Some(a) = &flags.abbreviations {
        config.abbreviations = Some(a.clone());
    }
    Ok(config)
}

fn run(config: &JobConfig, flags: &JobFlags) -> Result<(), Failure> {
    let summary = run_job(config, flags.resume, flags.stop_after_batches)?;
    print_summary(&summary)
}

fn print_summary(summary: &JobSummary) -> Result<(), Failure> {
    let value = json!({
        "task": summary.task,
        "output": summary.output,
        "total_examples": summary.report.total_examples,
        "kept": summary.report.kept,
        "discarded": summary.report.discarded(),
        "characters_submitted": summary.meter.characters_submitted,
        "requests_made": summary.meter.requests_made,
        "batches": summary.batches,
        "files": summary.files,
    });
    emit(&value, None)
}

fn load_stats_or_inputs(path: &Path) -> Result<CostInputs, Failure> {
    let value: Value = read_json(path, "--stats")?;
    let bad = |e: serde_json::Error| Failure::Usage(format!("--stats: {}: {e}", path.display()));
    if value.get("total_characters").is_some() {
        let stats: DatasetStats = serde_json::from_value(value).map_err(bad)?;
        Ok(CostInputs {
            corpus: Some(stats),
            inference: Some(stats),
            ..Default::default()
        })
    } else {
        serde_json::from_value(value).map_err(bad)
    }
}

fn cost_report(args: CostArgs) -> Result<(), Failure> {
    let pricing = PricingModel::load(&args.profile).map_err(|e| Usage(format!("--profile: {e}")))?;
    if args.reference {
        let (text, ok) = render_reference(&pricing).map_err(|e| Failure::Other(e.to_string()))?;
        match args.format {
            Format::Text => print!("{text}"),
            Format::Json => {
                let rows: Vec<Value> = crosslate::costmodel::reference_rows()
                    .iter()
                    .map(|row| {
                        let (report, checks, _) = row.check(&pricing).expect("reference inputs are complete");
                        json!({"label": row.label(), "report": report, "checks": checks})
                    })
                    .collect();
                emit(&json!({"rows": rows, "all_pass": ok}), None)?;
            }
        }
        return if ok {
            Ok(())
        } else {
            Err(Failure::Other("reference table not reproduced".into()))
        };
    }

    let scenario: Scenario = args
        .scenario
        .ok_or_else(|| Usage("the following required argument was not provided: --scenario".into()))?
        .into();
    let mut inputs = match &args.stats {
        Some(p) => load_stats_or_inputs(p)?,
        None => CostInputs::default(),
    };
    if let Some(p) = &args.inference_stats {
        inputs.inference = Some(read_json(p, "--inference-stats")?);
    }
    if let Some(p) = &args.passage_stats {
        inputs.passages = Some(read_json(p, "--passage-stats")?);
    }
    if let Some(h) = args.wall_hours {
        inputs.wall_hours = Some(h);
    }
    if let Some(s) = args.seconds_per_batch {
        inputs.throughput = Some(
            ThroughputProfile::new(s, args.batch_size).map_err(|e| Usage(format!("--seconds-per-batch: {e}")))?,
        );
    }
    if let Some(d) = args.rerank_depth {
        inputs.rerank_depth = d;
    }
    let report = build_report(scenario, &inputs, &pricing).map_err(|e| Failure::Usage(e.to_string()))?;
    match args.format {
        Format::Text => {
            print!("{}", render_table(&[(scenario.to_string(), report)]));
            Ok(())
        }
        Format::Json => emit(
            &json!({"report": report, "rounded": report.rounded(), "inputs": inputs}),
            None,
        ),
    }
}

fn score(args: ScoreArgs) -> Result<(), Failure> {
    let need = |p: &Option<PathBuf>, flag: &str| {
        p.clone()
            .ok_or_else(|| Failure::Usage(format!("--task requires {flag}")))
    };
    let value = match args.task {
        ScoreTask::Qa => {
            let gold = need(&args.gold, "--gold")?;
            let preds_path = need(&args.predictions, "--predictions")?;
            let opts = QaParseOptions {
                require_answers: false,
                ..Default::default()
            };
            let dataset = parse_qa(&read(&gold, "--gold")?, &opts)
                .map_err(|e| Failure::Other(format!("{}: {e}", gold.display())))?
                .dataset;
            let preds: QaPredictions = read_json(&preds_path, "--predictions")?;
            let norm = match &args.articles {
                Some(list) => Normalizer::with_articles(list.split(',').map(str::trim).filter(|a| !a.is_empty())),
                None => Normalizer::for_language(&args.language),
            };
            let s = qa_scores(&dataset, &preds, &norm).map_err(|e| Failure::Other(e.to_string()))?;
            json!({"exact_match": s.exact_match, "f1": s.f1, "examples": s.examples, "missing": s.missing})
        }
        ScoreTask::Nli => {
            let gold = need(&args.gold, "--gold")?;
            let preds_path = need(&args.predictions, "--predictions")?;
            let schema = match &args.nli_schema {
                Some(p) => load_schema(p, "--nli-schema")?,
                None => NliSchema::default(),
            };
            let pairs = parse_nli(&read(&gold, "--gold")?, &schema)
                .map_err(|e| Failure::Other(format!("{}: {e}", gold.display())))?;
            let preds = parse_labels(&read(&preds_path, "--predictions")?, &schema)
                .map_err(|e| Failure::Other(format!("{}: {e}", preds_path.display())))?;
            let acc = accuracy_by_id(&preds, &pairs).map_err(|e| Failure::Other(e.to_string()))?;
            json!({"accuracy": acc, "examples": pairs.len()})
        }
        ScoreTask::Ranking => {
            let run_path = need(&args.run, "--run")?;
            let qrels_path = need(&args.qrels, "--qrels")?;
            let (run, _) = parse_run(&read(&run_path, "--run")?)
                .map_err(|e| Failure::Other(format!("{}: {e}", run_path.display())))?;
            let qrels = parse_qrels(&read(&qrels_path, "--qrels")?)
                .map_err(|e| Failure::Other(format!("{}: {e}", qrels_path.display())))?;
            let judged: BTreeSet<&String> = qrels.iter().filter(|(_, r)| !r.is_empty()).map(|(q, _)| q).collect();
            json!({format!("mrr@{}", args.k): mrr_at_k(&run, &qrels, args.k), "judged_queries": judged.len()})
        }
    };
    emit(&value, None)
}
