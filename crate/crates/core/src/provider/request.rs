use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ProviderError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: ChatRole::Assistant,
            content: content.into(),
        }
    }
}

pub type Meta = BTreeMap<String, serde_json::Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    /// `None` sends no system message at all.
    pub system_text: Option<String>,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub model_id: String,
    pub max_output_tokens: u32,
    /// Free-form annotations; never part of the digest.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provider_meta: Meta,
}

#[derive(Serialize)]
struct DigestView<'a> {
    system_text: &'a Option<String>,
    messages: &'a [ChatMessage],
    temperature: f64,
    model_id: &'a str,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.messages.is_empty() {
            return Err(ProviderError::InvalidRequest("messages must not be empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ProviderError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(ProviderError::InvalidRequest("max_output_tokens must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of system text, messages,
    /// temperature and model id.
    pub fn digest(&self) -> String {
        let view = DigestView {
            system_text: &self.system_text,
            messages: &self.messages,
            temperature: self.temperature,
            model_id: &self.model_id,
        };
        crate::sha256_hex(serde_json::to_vec(&view).expect("request serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub latency_seconds: f64,
    #[serde(default)]
    pub provider_meta: Meta,
}
