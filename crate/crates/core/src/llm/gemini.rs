//! Live provider for the Gemini `generateContent` REST API.

use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatMessage, LlmError, LlmProvider, ModelTier, Role};

pub const DEFAULT_ENDPOINT: &str = "https://generativelanguage.googleapis.com/v1beta";
pub const DEFAULT_FAST_MODEL: &str = "gemini-2.5-flash";
pub const DEFAULT_DEEP_MODEL: &str = "gemini-2.5-pro";

#[derive(Debug, Clone)]
pub struct GeminiConfig {
    pub api_key: String,
    pub endpoint: String,
    pub fast_model: String,
    pub deep_model: String,
    pub timeout: Duration,
}

impl GeminiConfig {
    /// Reads `HIFI_LLM_*` variables; only the API key is required.
    pub fn from_env() -> Result<Self, LlmError> {
        let api_key = std::env::var("HIFI_LLM_API_KEY")
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| LlmError::NoProvider("HIFI_LLM_API_KEY is not set".into()))?;
        let var = |name: &str, default: &str| {
            std::env::var(name)
                .ok()
                .filter(|v| !v.is_empty())
                .unwrap_or_else(|| default.to_string())
        };
        Ok(Self {
            api_key,
            endpoint: var("HIFI_LLM_ENDPOINT", DEFAULT_ENDPOINT),
            fast_model: var("HIFI_LLM_FAST_MODEL", DEFAULT_FAST_MODEL),
            deep_model: var("HIFI_LLM_DEEP_MODEL", DEFAULT_DEEP_MODEL),
            timeout: Duration::from_secs(90),
        })
    }
}

pub struct GeminiProvider {
    config: GeminiConfig,
    agent: ureq::Agent,
}

impl GeminiProvider {
    pub fn new(config: GeminiConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    fn model_for(&self, tier: ModelTier) -> &str {
        match tier {
            ModelTier::Fast => &self.config.fast_model,
            ModelTier::Deep => &self.config.deep_model,
        }
    }
}

pub(crate) fn request_body(messages: &[ChatMessage]) -> Value {
    let contents: Vec<Value> = messages
        .iter()
        .map(|m| {
            let role = match m.role {
                Role::User => "user",
                Role::Model => "model",
            };
            json!({ "role": role, "parts": [{ "text": m.text }] })
        })
        .collect();
    json!({
        "contents": contents,
        "generationConfig": { "temperature": 0.0, "candidateCount": 1 },
    })
}

pub(crate) fn response_text(body: &Value) -> Result<String, LlmError> {
    let parts = body
        .pointer("/candidates/0/content/parts")
        .and_then(Value::as_array)
        .ok_or(LlmError::EmptyResponse)?;
    let text: String = parts
        .iter()
        .filter(|p| !p.get("thought").and_then(Value::as_bool).unwrap_or(false))
        .filter_map(|p| p.get("text").and_then(Value::as_str))
        .collect();
    Ok(text)
}

impl LlmProvider for GeminiProvider {
    fn complete(&self, tier: ModelTier, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let url = format!(
            "{}/models/{}:generateContent",
            self.config.endpoint.trim_end_matches('/'),
            self.model_for(tier)
        );
        let mut resp = self
            .agent
            .post(&url)
            .header("x-goog-api-key", &self.config.api_key)
            .send_json(request_body(messages))
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(LlmError::Http { status, body: text });
        }
        let body: Value = serde_json::from_str(&text)
            .map_err(|e| LlmError::Transport(format!("invalid response JSON: {e}")))?;
        response_text(&body)
    }

    fn name(&self) -> &str {
        "gemini"
    }
}
