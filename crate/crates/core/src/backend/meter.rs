use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// Counters for one batch call, attempts included.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchStats {
    /// Characters of the batch when it succeeded, else 0.
    pub characters_submitted: u64,
    pub characters_received: u64,
    /// Characters sent in attempts that failed (retried or fatal).
    pub characters_failed: u64,
    pub segments: u64,
    pub requests: u64,
    pub failed_requests: u64,
    pub seconds: f64,
    pub succeeded: bool,
}

/// Serializable meter state.
///
/// `characters_submitted` is the billable count: each successfully
/// translated segment is counted once, no matter how many attempts it took.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeterSnapshot {
    pub characters_submitted: u64,
    pub characters_received: u64,
    pub characters_failed: u64,
    pub segments_translated: u64,
    pub requests_made: u64,
    pub failed_requests: u64,
    pub wall_seconds: f64,
    /// Seconds per successful batch, in completion order.
    pub batch_latencies: Vec<f64>,
}

impl MeterSnapshot {
    pub fn record(&mut self, batch: &BatchStats) {
        self.characters_submitted += batch.characters_submitted;
        self.characters_received += batch.characters_received;
        self.characters_failed += batch.characters_failed;
        self.requests_made += batch.requests;
        self.failed_requests += batch.failed_requests;
        if batch.succeeded {
            self.segments_translated += batch.segments;
            self.batch_latencies.push(batch.seconds);
        }
    }

    pub fn merge(&mut self, other: &MeterSnapshot) {
        self.characters_submitted += other.characters_submitted;
        self.characters_received += other.characters_received;
        self.characters_failed += other.characters_failed;
        self.segments_translated += other.segments_translated;
        self.requests_made += other.requests_made;
        self.failed_requests += other.failed_requests;
        self.wall_seconds += other.wall_seconds;
        self.batch_latencies.extend_from_slice(&other.batch_latencies);
    }

    /// Mean seconds per batch, `None` before the first batch.
    pub fn mean_batch_latency(&self) -> Option<f64> {
        (!self.batch_latencies.is_empty())
            .then(|| self.batch_latencies.iter().sum::<f64>() / self.batch_latencies.len() as f64)
    }

    /// Snapshot with timing fields cleared, for comparing runs.
    pub fn counts_only(&self) -> MeterSnapshot {
        MeterSnapshot {
            wall_seconds: 0.0,
            batch_latencies: Vec::new(),
            ..self.clone()
        }
    }
}

/// Shared, thread-safe meter.
#[derive(Debug, Default)]
pub struct Meter {
    inner: Mutex<MeterSnapshot>,
}

impl Meter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, batch: &BatchStats) {
        self.lock().record(batch);
    }

    pub fn add_wall_seconds(&self, seconds: f64) {
        self.lock().wall_seconds += seconds;
    }

    pub fn snapshot(&self) -> MeterSnapshot {
        self.lock().clone()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, MeterSnapshot> {
        // counters stay consistent even if a recording thread panicked
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }
}
