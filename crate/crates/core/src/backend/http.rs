//! JSON-over-HTTP translation backend.
//!
//! `POST {endpoint}/translate` with
//! `{"texts": [...], "source": "en", "target": "pt"}`; a `200` response
//! carries `{"translations": [...]}` of the same length. `429` is a rate
//! limit (honouring `Retry-After` seconds); any other status is a transport
//! error.

use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{BackendConfig, BackendError, Translator};

/// Bearer token sent with every request when set.
pub const API_KEY_ENV: &str = "CROSSLATE_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslateRequest {
    pub texts: Vec<String>,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslateResponse {
    pub translations: Vec<String>,
}

pub struct HttpTranslator {
    client: Client,
    url: String,
    source: String,
    target: String,
    api_key: Option<String>,
}

impl HttpTranslator {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        let base = config.endpoint.trim_end_matches('/');
        if !(base.starts_with("http://") || base.starts_with("https://")) {
            return Err(BackendError::Config(format!(
                "endpoint {:?} is neither http(s):// nor mock:",
                config.endpoint
            )));
        }
        let url = if base.ends_with("/translate") {
            base.to_string()
        } else {
            format!("{base}/translate")
        };
        let client = Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self {
            client,
            url,
            source: config.source_lang.clone(),
            target: config.target_lang.clone(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Translator for HttpTranslator {
    fn translate(&self, texts: &[String]) -> Result<Vec<String>, BackendError> {
        let body = TranslateRequest {
            texts: texts.to_vec(),
            source: self.source.clone(),
            target: self.target.clone(),
        };
        let mut request = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        match response.status() {
            StatusCode::OK => {}
            StatusCode::TOO_MANY_REQUESTS => {
                let retry_after = response
                    .headers()
                    .get(reqwest::header::RETRY_AFTER)
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .map(Duration::from_secs_f64);
                return Err(BackendError::RateLimited { retry_after });
            }
            status => return Err(BackendError::Transport(format!("HTTP {status} from {}", self.url))),
        }
        let parsed: TranslateResponse = response
            .json()
            .map_err(|e| BackendError::Transport(format!("bad response body: {e}")))?;
        if parsed.translations.len() != texts.len() {
            return Err(BackendError::LengthMismatch {
                expected: texts.len(),
                got: parsed.translations.len(),
            });
        }
        Ok(parsed.translations)
    }

    fn describe(&self) -> String {
        self.url.clone()
    }
}
