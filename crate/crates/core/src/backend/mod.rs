//! The translation boundary.
//!
//! A [`Translator`] turns a batch of strings into a batch of translations.
//! [`BackendClient`] wraps one with batch-size checks, retries, metering and
//! a bounded number of batches in flight. Results always come back in
//! submission order.

mod http;
mod meter;
mod mock;

pub use http::{HttpTranslator, TranslateRequest, TranslateResponse, API_KEY_ENV};
pub use meter::{BatchStats, Meter, MeterSnapshot};
pub use mock::{MockKind, MockTranslator};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spanmark::DelimiterPair;
use crate::text::char_len;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited by backend")]
    RateLimited { retry_after: Option<Duration> },
    #[error("backend returned {got} translations for {expected} inputs")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid batch: {0}")]
    InvalidBatch(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Transport(_) | BackendError::RateLimited { .. })
    }
}

pub trait Translator: Send + Sync {
    /// Translates every input; the output has the same length and order.
    fn translate(&self, texts: &[String]) -> Result<Vec<String>, BackendError>;

    /// Stable description, part of a job's identity.
    fn describe(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before retry `n` is `backoff_base_secs * 2^(n-1)`.
    pub backoff_base_secs: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            backoff_base_secs: 1.0,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        Duration::from_secs_f64(self.backoff_base_secs.max(0.0) * 2f64.powi(retry.saturating_sub(1) as i32))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    /// `http://host:port` (requests go to `/translate`) or `mock:<kind>[:params]`.
    pub endpoint: String,
    pub source_lang: String,
    pub target_lang: String,
    pub max_batch_size: usize,
    pub retry: RetryPolicy,
    pub timeout_secs: f64,
    /// Batches allowed in flight at once.
    pub max_in_flight: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            endpoint: "mock:identity".to_string(),
            source_lang: "en".to_string(),
            target_lang: "pt".to_string(),
            max_batch_size: 32,
            retry: RetryPolicy::default(),
            timeout_secs: 60.0,
            max_in_flight: 4,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_batch_size == 0 {
            return Err(BackendError::Config("max batch size must be at least 1".into()));
        }
        if self.retry.max_attempts == 0 {
            return Err(BackendError::Config("retry attempts must be at least 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(BackendError::Config("in-flight limit must be at least 1".into()));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(BackendError::Config("timeout must be positive".into()));
        }
        Ok(())
    }
}

pub struct BackendClient {
    translator: Arc<dyn Translator>,
    config: BackendConfig,
    meter: Meter,
}

/// Outcome of one batch plus what it cost.
pub type BatchResult = (Result<Vec<String>, BackendError>, BatchStats);

impl BackendClient {
    pub fn new(translator: Arc<dyn Translator>, config: BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        Ok(Self {
            translator,
            config,
            meter: Meter::new(),
        })
    }

    /// Builds the translator named by `config.endpoint`. Mock kinds that act
    /// on delimiters use `delimiters`.
    pub fn from_config(config: BackendConfig, delimiters: &DelimiterPair) -> Result<Self, BackendError> {
        config.validate()?;
        let translator: Arc<dyn Translator> = match config.endpoint.strip_prefix("mock:") {
            Some(spec) => Arc::new(MockTranslator::new(MockKind::parse(spec)?, delimiters.clone())),
            None => Arc::new(HttpTranslator::new(&config)?),
        };
        Self::new(translator, config)
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    pub fn meter(&self) -> &Meter {
        &self.meter
    }

    /// Identity of the backend for job hashing.
    pub fn describe(&self) -> String {
        format!(
            "{} {}->{}",
            self.translator.describe(),
            self.config.source_lang,
            self.config.target_lang
        )
    }

    /// Translates one batch, retrying transport failures and rate limits.
    pub fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, BackendError> {
        let start = Instant::now();
        let (result, _) = self.run_batch(texts);
        self.meter.add_wall_seconds(start.elapsed().as_secs_f64());
        result
    }

    /// Translates every batch with at most `max_in_flight` outstanding.
    /// Element `i` of the result belongs to `batches[i]`.
    pub fn translate_batches(&self, batches: &[Vec<String>]) -> Vec<BatchResult> {
        let start = Instant::now();
        let workers = self.config.max_in_flight.min(batches.len());
        let results = if workers <= 1 {
            batches.iter().map(|b| self.run_batch(b)).collect()
        } else {
            let next = AtomicUsize::new(0);
            let slots: Mutex<Vec<Option<BatchResult>>> = Mutex::new(vec![None; batches.len()]);
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        if i >= batches.len() {
                            break;
                        }
                        let outcome = self.run_batch(&batches[i]);
                        slots.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(outcome);
                    });
                }
            });
            slots
                .into_inner()
                .unwrap_or_else(|e| e.into_inner())
                .into_iter()
                .map(|s| s.expect("every batch index is claimed by a worker"))
                .collect()
        };
        self.meter.add_wall_seconds(start.elapsed().as_secs_f64());
        results
    }

    fn run_batch(&self, texts: &[String]) -> BatchResult {
        let mut stats = BatchStats {
            segments: texts.len() as u64,
            ..Default::default()
        };
        if texts.is_empty() || texts.len() > self.config.max_batch_size {
            let msg = format!(
                "batch of {} (allowed 1..={})",
                texts.len(),
                self.config.max_batch_size
            );
            return (Err(BackendError::InvalidBatch(msg)), stats);
        }
        let chars: u64 = texts.iter().map(|t| char_len(t) as u64).sum();
        let policy = &self.config.retry;
        let mut attempt = 0;
        let result = loop {
            attempt += 1;
            stats.requests += 1;
            let t0 = Instant::now();
            let outcome = self
                .translator
                .translate(texts)
                .and_then(|out| match out.len() == texts.len() {
                    true => Ok(out),
                    false => Err(BackendError::LengthMismatch {
                        expected: texts.len(),
                        got: out.len(),
                    }),
                });
            match outcome {
                Ok(out) => {
                    stats.seconds = t0.elapsed().as_secs_f64();
                    stats.characters_submitted = chars;
                    stats.characters_received = out.iter().map(|t| char_len(t) as u64).sum();
                    stats.succeeded = true;
                    break Ok(out);
                }
                Err(err) => {
                    stats.failed_requests += 1;
                    stats.characters_failed += chars;
                    if !err.is_retryable() || attempt >= policy.max_attempts {
                        break Err(err);
                    }
                    let wait = match &err {
                        BackendError::RateLimited { retry_after: Some(d) } => *d,
                        _ => policy.delay(attempt),
                    };
                    log::warn!("batch attempt {attempt} failed ({err}); retrying in {wait:?}");
                    std::thread::sleep(wait);
                }
            }
        };
        self.meter.record(&stats);
        (result, stats)
    }
}
