use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde_json::{json, Value};

use super::{BackendConfig, ChatBackend, ChatRequest, ChatResponse, Meta, ProviderError};

/// OpenAI-compatible chat-completions client.
#[derive(Debug, Clone)]
pub struct LiveBackend {
    client: reqwest::Client,
    url: String,
    api_key: Option<String>,
    max_retries: u32,
    initial_backoff: Duration,
}

enum Attempt {
    Done(ChatResponse),
    Retry(ProviderError),
    Fail(ProviderError),
}

impl LiveBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        let endpoint = config.endpoint_url.as_deref().unwrap_or_default().trim_end_matches('/');
        let url = if endpoint.ends_with("/chat/completions") {
            endpoint.to_string()
        } else {
            format!("{endpoint}/chat/completions")
        };
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        if api_key.is_none() {
            tracing::warn!(var = %config.api_key_env, "API key variable not set; sending requests without authorization");
        }
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_seconds))
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            url,
            api_key,
            max_retries: config.max_retries,
            initial_backoff: Duration::from_secs_f64(config.initial_backoff_seconds),
        })
    }

    fn body(request: &ChatRequest) -> Value {
        let mut messages = Vec::with_capacity(request.messages.len() + 1);
        if let Some(system) = &request.system_text {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.extend(request.messages.iter().map(|m| json!({"role": m.role, "content": m.content})));
        json!({
            "model": request.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        })
    }

    async fn attempt(&self, body: &Value) -> Attempt {
        let mut builder = self.client.post(&self.url).json(body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let started = Instant::now();
        let resp = match builder.send().await {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Attempt::Retry(ProviderError::Transport(format!("timed out: {e}"))),
            Err(e) => return Attempt::Fail(ProviderError::Transport(e.to_string())),
        };
        let status = resp.status();
        let payload = match resp.text().await {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Attempt::Retry(ProviderError::Transport(format!("timed out: {e}"))),
            Err(e) => return Attempt::Fail(ProviderError::Transport(e.to_string())),
        };
        let latency = started.elapsed().as_secs_f64();
        if !status.is_success() {
            let err = ProviderError::Status {
                status: status.as_u16(),
                body: payload,
            };
            return if status.as_u16() == 429 || status.is_server_error() {
                Attempt::Retry(err)
            } else {
                Attempt::Fail(err)
            };
        }
        match parse_completion(&payload) {
            Ok((text, meta)) => Attempt::Done(ChatResponse {
                text,
                latency_seconds: latency,
                provider_meta: meta,
            }),
            Err(e) => Attempt::Fail(e),
        }
    }
}

fn parse_completion(payload: &str) -> Result<(String, Meta), ProviderError> {
    let v: Value = serde_json::from_str(payload)
        .map_err(|e| ProviderError::Malformed(format!("response is not JSON: {e}")))?;
    let choice = v
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| ProviderError::Malformed("response has no choices".into()))?;
    let text = match choice.pointer("/message/content") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => String::new(),
        Some(other) => return Err(ProviderError::Malformed(format!("content is not text: {other}"))),
    };
    let mut meta = Meta::new();
    for key in ["id", "model", "usage"] {
        if let Some(x) = v.get(key) {
            meta.insert(key.into(), x.clone());
        }
    }
    if let Some(x) = choice.get("finish_reason") {
        meta.insert("finish_reason".into(), x.clone());
    }
    Ok((text, meta))
}

#[async_trait]
impl ChatBackend for LiveBackend {
    async fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        request.validate()?;
        let body = Self::body(request);
        let mut backoff = self.initial_backoff;
        let mut attempt = 0;
        loop {
            match self.attempt(&body).await {
                Attempt::Done(r) => return Ok(r),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e) if attempt >= self.max_retries => return Err(e),
                Attempt::Retry(e) => {
                    tracing::warn!(attempt, error = %e, "transient provider failure; retrying");
                    tokio::time::sleep(backoff).await;
                    backoff *= 2;
                    attempt += 1;
                }
            }
        }
    }
}
