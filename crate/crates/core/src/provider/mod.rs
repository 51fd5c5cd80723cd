//! Chat-completion gateway: a live OpenAI-compatible client and a scripted
//! backend that replays recorded responses by request digest.

mod fixtures;
mod live;
mod request;

use std::path::PathBuf;
use std::sync::Arc;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fixtures::{record_fixture, FixtureRecord, FixtureWriter, RecordingBackend, ScriptedBackend};
pub use live::LiveBackend;
pub use request::{ChatMessage, ChatRequest, ChatResponse, ChatRole, Meta};

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("no fixture for request digest {digest}")]
    FixtureMiss { digest: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Scripted,
}

fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    3
}

fn default_backoff() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint_url: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default)]
    pub fixture_path: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub initial_backoff_seconds: f64,
}

impl BackendConfig {
    pub fn live(endpoint_url: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Live,
            endpoint_url: Some(endpoint_url.into()),
            api_key_env: default_api_key_env(),
            fixture_path: None,
            timeout_seconds: default_timeout(),
            max_retries: default_retries(),
            initial_backoff_seconds: default_backoff(),
        }
    }

    pub fn scripted(fixture_path: impl Into<PathBuf>) -> Self {
        Self {
            kind: BackendKind::Scripted,
            endpoint_url: None,
            api_key_env: default_api_key_env(),
            fixture_path: Some(fixture_path.into()),
            timeout_seconds: default_timeout(),
            max_retries: default_retries(),
            initial_backoff_seconds: default_backoff(),
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        let bad = |m: &str| Err(ProviderError::InvalidConfig(m.into()));
        if !(self.timeout_seconds.is_finite() && self.timeout_seconds > 0.0) {
            return bad("timeout_seconds must be positive");
        }
        if !(self.initial_backoff_seconds.is_finite() && self.initial_backoff_seconds >= 0.0) {
            return bad("initial_backoff_seconds must be non-negative");
        }
        match self.kind {
            BackendKind::Live if self.endpoint_url.as_deref().is_none_or(str::is_empty) => {
                bad("live backend needs endpoint_url")
            }
            BackendKind::Live if self.api_key_env.is_empty() => bad("live backend needs api_key_env"),
            BackendKind::Scripted if self.fixture_path.is_none() => bad("scripted backend needs fixture_path"),
            _ => Ok(()),
        }
    }
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}

#[async_trait]
impl<T: ChatBackend + ?Sized> ChatBackend for Arc<T> {
    async fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (**self).complete(request).await
    }
}

/// Builds the backend described by `config`.
pub fn connect(config: &BackendConfig) -> Result<Arc<dyn ChatBackend>, ProviderError> {
    config.validate()?;
    Ok(match config.kind {
        BackendKind::Live => Arc::new(LiveBackend::new(config)?),
        BackendKind::Scripted => {
            Arc::new(ScriptedBackend::load(config.fixture_path.as_deref().expect("validated"))?)
        }
    })
}

/// One-shot completion against the backend described by `config`.
pub async fn complete(request: &ChatRequest, config: &BackendConfig) -> Result<ChatResponse, ProviderError> {
    connect(config)?.complete(request).await
}
