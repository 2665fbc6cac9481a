//! Batch runner shared by every job: greedy packing, bounded in-flight
//! translation, per-batch checkpoints and resume.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineError, RunOptions};
use crate::backend::{BackendClient, BackendError, BatchStats, MeterSnapshot};
use crate::text::char_len;

/// Progress of a job, rewritten after each committed batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Hash of the backend identity, batch size and every unit of input.
    pub job_id: String,
    pub total_batches: usize,
    pub last_completed_batch: Option<usize>,
    pub partial_outputs: PathBuf,
    /// Counts for committed batches. Latencies live in the partial outputs.
    pub meter: MeterSnapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub job: Option<serde_json::Value>,
}

impl Checkpoint {
    pub fn completed_batches(&self) -> usize {
        self.last_completed_batch.map_or(0, |i| i + 1)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let bytes = fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| PipelineError::Checkpoint(format!("{}: {e}", path.display())))
    }

    fn store(&self, path: &Path) -> Result<(), PipelineError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(self).expect("checkpoint serializes"))?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Where the per-batch outputs of a checkpoint at `path` are kept.
    pub fn partial_path(path: &Path) -> PathBuf {
        let mut name = path.as_os_str().to_owned();
        name.push(".partial.jsonl");
        PathBuf::from(name)
    }
}

/// One line of the partial-outputs file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialBatch {
    pub batch: usize,
    /// `None` when the backend returned the wrong number of translations.
    pub outputs: Option<Vec<String>>,
    pub seconds: f64,
}

pub(crate) struct UnitResults {
    pub outputs: Vec<Option<String>>,
    pub meter: MeterSnapshot,
    pub emitted_characters: u64,
    pub batches: usize,
}

pub(crate) fn job_id(kind: &str, client: &BackendClient, units: &[String]) -> String {
    let mut h = Sha256::new();
    h.update(kind.as_bytes());
    h.update([0]);
    h.update(client.describe().as_bytes());
    h.update([0]);
    h.update((client.config().max_batch_size as u64).to_le_bytes());
    for u in units {
        h.update((u.len() as u64).to_le_bytes());
        h.update(u.as_bytes());
    }
    hex::encode(h.finalize())
}

struct Progress {
    checkpoint: Option<(PathBuf, Checkpoint)>,
    writer: Option<BufWriter<File>>,
    done: Vec<PartialBatch>,
    meter: MeterSnapshot,
}

impl Progress {
    fn start(
        opts: &RunOptions,
        id: String,
        total_batches: usize,
    ) -> Result<Self, PipelineError> {
        let Some(path) = opts.checkpoint.clone() else {
            return Ok(Self {
                checkpoint: None,
                writer: None,
                done: Vec::new(),
                meter: MeterSnapshot::default(),
            });
        };
        let partial = Checkpoint::partial_path(&path);

        if opts.resume && path.exists() {
            let ck = Checkpoint::load(&path)?;
            if ck.job_id != id {
                return Err(PipelineError::StaleCheckpoint {
                    expected: id,
                    found: ck.job_id,
                });
            }
            if ck.total_batches != total_batches {
                return Err(PipelineError::Checkpoint("batch count changed".into()));
            }
            let done = read_partials(&ck.partial_outputs, ck.completed_batches())?;
            // rewrite without any line written after the last checkpoint
            let mut writer = BufWriter::new(File::create(&ck.partial_outputs)?);
            for b in &done {
                write_partial(&mut writer, b)?;
            }
            let mut meter = ck.meter.clone();
            meter.batch_latencies = done.iter().filter(|b| b.outputs.is_some()).map(|b| b.seconds).collect();
            log::info!("resuming job {} at batch {}/{}", &id[..12], done.len(), total_batches);
            return Ok(Self {
                checkpoint: Some((path, ck)),
                writer: Some(writer),
                done,
                meter,
            });
        }

        let ck = Checkpoint {
            job_id: id,
            total_batches,
            last_completed_batch: None,
            partial_outputs: partial.clone(),
            meter: MeterSnapshot::default(),
            job: opts.job.clone(),
        };
        let writer = BufWriter::new(File::create(&partial)?);
        ck.store(&path)?;
        Ok(Self {
            checkpoint: Some((path, ck)),
            writer: Some(writer),
            done: Vec::new(),
            meter: MeterSnapshot::default(),
        })
    }

    fn commit(&mut self, batch: PartialBatch, stats: &BatchStats) -> Result<(), PipelineError> {
        self.meter.record(stats);
        if let (Some(w), Some((path, ck))) = (self.writer.as_mut(), self.checkpoint.as_mut()) {
            write_partial(w, &batch)?;
            w.flush()?;
            w.get_ref().sync_data()?;
            ck.last_completed_batch = Some(batch.batch);
            ck.meter = MeterSnapshot {
                batch_latencies: Vec::new(),
                ..self.meter.clone()
            };
            ck.store(path)?;
        }
        self.done.push(batch);
        Ok(())
    }
}

fn write_partial(w: &mut impl Write, batch: &PartialBatch) -> Result<(), PipelineError> {
    serde_json::to_writer(&mut *w, batch).map_err(|e| PipelineError::Checkpoint(e.to_string()))?;
    w.write_all(b"\n")?;
    Ok(())
}

fn read_partials(path: &Path, expected: usize) -> Result<Vec<PartialBatch>, PipelineError> {
    let file = OpenOptions::new().read(true).open(path)?;
    let mut done = Vec::with_capacity(expected);
    for line in BufReader::new(file).lines().take(expected) {
        let batch: PartialBatch =
            serde_json::from_str(&line?).map_err(|e| PipelineError::Checkpoint(e.to_string()))?;
        if batch.batch != done.len() {
            return Err(PipelineError::Checkpoint(format!(
                "partial outputs out of order at batch {}",
                batch.batch
            )));
        }
        done.push(batch);
    }
    if done.len() != expected {
        return Err(PipelineError::Checkpoint(format!(
            "checkpoint records {expected} batches but {} were found",
            done.len()
        )));
    }
    Ok(done)
}

/// Translates `units` in order. `None` marks units whose batch came back
/// with the wrong length.
pub(crate) fn run_units(
    kind: &str,
    client: &BackendClient,
    units: &[String],
    opts: &RunOptions,
) -> Result<UnitResults, PipelineError> {
    let started = Instant::now();
    let batch_size = client.config().max_batch_size;
    let batches: Vec<Vec<String>> = units.chunks(batch_size).map(<[String]>::to_vec).collect();
    let total = batches.len();
    let emitted_characters = units.iter().map(|u| char_len(u) as u64).sum();

    let mut progress = Progress::start(opts, job_id(kind, client, units), total)?;
    let limit = opts.stop_after_batches.unwrap_or(usize::MAX);

    while progress.done.len() < total {
        let completed = progress.done.len();
        if completed >= limit {
            progress.meter.wall_seconds += started.elapsed().as_secs_f64();
            return Err(PipelineError::Interrupted {
                completed_batches: completed,
                total_batches: total,
                meter: progress.meter,
            });
        }
        let window = client
            .config()
            .max_in_flight
            .min(total - completed)
            .min(limit - completed);
        let results = client.translate_batches(&batches[completed..completed + window]);
        for (offset, (result, stats)) in results.into_iter().enumerate() {
            let index = completed + offset;
            let outputs = match result {
                Ok(out) => Some(out),
                Err(BackendError::LengthMismatch { expected, got }) => {
                    log::warn!("batch {index}: backend returned {got} of {expected} translations; discarding");
                    None
                }
                Err(source) => {
                    progress.meter.wall_seconds += started.elapsed().as_secs_f64();
                    return Err(PipelineError::Backend {
                        source,
                        completed_batches: index,
                        meter: progress.meter,
                    });
                }
            };
            let seconds = stats.seconds;
            progress.commit(
                PartialBatch {
                    batch: index,
                    outputs,
                    seconds,
                },
                &stats,
            )?;
        }
    }

    progress.meter.wall_seconds += started.elapsed().as_secs_f64();
    let mut outputs = Vec::with_capacity(units.len());
    for (batch, done) in batches.iter().zip(&progress.done) {
        match &done.outputs {
            Some(out) if out.len() == batch.len() => outputs.extend(out.iter().cloned().map(Some)),
            Some(_) => return Err(PipelineError::Checkpoint(format!("batch {} has the wrong length", done.batch))),
            None => outputs.extend(std::iter::repeat_n(None, batch.len())),
        }
    }
    Ok(UnitResults {
        outputs,
        meter: progress.meter,
        emitted_characters,
        batches: total,
    })
}
