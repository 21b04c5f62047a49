//! Model gateway: every model call in the pipeline goes through [`Gateway`].
//!
//! Calls declare a [`ModelTier`]: `Fast` for the cheap gatekeeping stages
//! (query planning, URL and section filtering, citation checks) and `Deep` for
//! answer generation. The gateway adds bounded retries, fixture record/replay
//! and per-tier call counters.

pub mod fixture;
pub mod gemini;
pub mod json;
pub mod template;

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::mode::Mode;
use crate::model::TranscriptEntry;

pub use fixture::{FixtureRequest, FixtureStore, ReplayFixture};
pub use json::{extract_json_array, ExtractError};
pub use template::{render, render_template, TemplateError, TemplateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Model,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub text: String,
}

impl ChatMessage {
    pub fn user(text: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            text: text.into(),
        }
    }

    pub fn model(text: impl Into<String>) -> Self {
        Self {
            role: Role::Model,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTier {
    Fast,
    Deep,
}

impl fmt::Display for ModelTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTier::Fast => "fast",
            ModelTier::Deep => "deep",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("HTTP {status} from model endpoint: {body}")]
    Http { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("no recorded fixture for request {key}")]
    ReplayMiss { key: String },
    #[error("model returned an empty response")]
    EmptyResponse,
    #[error("fixture store: {0}")]
    Fixture(String),
    #[error("no live model provider configured ({0})")]
    NoProvider(String),
}

impl LlmError {
    fn is_retryable(&self) -> bool {
        match self {
            LlmError::Transport(_) => true,
            LlmError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }

    /// Errors that indicate a broken fixture setup rather than bad model
    /// output. Stage fallbacks must not swallow these.
    pub fn is_replay_integrity(&self) -> bool {
        matches!(self, LlmError::ReplayMiss { .. } | LlmError::Fixture(_))
    }
}

/// A live model backend.
pub trait LlmProvider: Send + Sync {
    fn complete(&self, tier: ModelTier, messages: &[ChatMessage]) -> Result<String, LlmError>;

    fn name(&self) -> &str;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            base_delay: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CallCounts {
    pub fast: usize,
    pub deep: usize,
    /// Requests that reached a live provider.
    pub network: usize,
}

#[derive(Debug, Default)]
struct Counters {
    fast: AtomicUsize,
    deep: AtomicUsize,
    network: AtomicUsize,
}

pub struct Gateway {
    mode: Mode,
    provider: Option<Arc<dyn LlmProvider>>,
    store: Option<FixtureStore>,
    retry: RetryPolicy,
    counters: Counters,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("mode", &self.mode)
            .field("provider", &self.provider.as_ref().map(|p| p.name().to_string()))
            .field("store", &self.store.as_ref().map(|s| s.dir().to_path_buf()))
            .finish()
    }
}

impl Gateway {
    pub fn live(provider: Arc<dyn LlmProvider>) -> Self {
        Self::new(Mode::Live, Some(provider), None)
    }

    pub fn record(provider: Arc<dyn LlmProvider>, store: FixtureStore) -> Self {
        Self::new(Mode::Record, Some(provider), Some(store))
    }

    pub fn replay(store: FixtureStore) -> Self {
        Self::new(Mode::Replay, None, Some(store))
    }

    fn new(mode: Mode, provider: Option<Arc<dyn LlmProvider>>, store: Option<FixtureStore>) -> Self {
        Self {
            mode,
            provider,
            store,
            retry: RetryPolicy::default(),
            counters: Counters::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            fast: self.counters.fast.load(Ordering::Relaxed),
            deep: self.counters.deep.load(Ordering::Relaxed),
            network: self.counters.network.load(Ordering::Relaxed),
        }
    }

    pub fn complete(&self, tier: ModelTier, messages: &[ChatMessage]) -> Result<String, LlmError> {
        match messages.last() {
            None => return Err(LlmError::InvalidRequest("no messages".into())),
            Some(m) if m.role != Role::User => {
                return Err(LlmError::InvalidRequest("last message must be from the user".into()))
            }
            Some(_) => {}
        }
        match tier {
            ModelTier::Fast => self.counters.fast.fetch_add(1, Ordering::Relaxed),
            ModelTier::Deep => self.counters.deep.fetch_add(1, Ordering::Relaxed),
        };

        let request = FixtureRequest {
            tier,
            messages: messages.to_vec(),
        };
        let response = match self.mode {
            Mode::Replay => {
                let key = request.key();
                let store = self.store.as_ref().expect("replay gateway has a store");
                store
                    .get(&key)?
                    .ok_or(LlmError::ReplayMiss { key })?
                    .response
            }
            Mode::Live => self.call_provider(tier, messages)?,
            Mode::Record => {
                let response = self.call_provider(tier, messages)?;
                let store = self.store.as_ref().expect("record gateway has a store");
                let metadata = self
                    .provider
                    .as_ref()
                    .map(|p| serde_json::json!({ "provider": p.name() }))
                    .unwrap_or(Value::Null);
                store.put(ReplayFixture {
                    key: request.key(),
                    request,
                    response: response.clone(),
                    metadata,
                })?;
                response
            }
        };
        if response.trim().is_empty() {
            return Err(LlmError::EmptyResponse);
        }
        Ok(response)
    }

    fn call_provider(&self, tier: ModelTier, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let provider = self
            .provider
            .as_ref()
            .ok_or_else(|| LlmError::NoProvider(format!("{} mode", self.mode)))?;
        let mut attempt = 0;
        loop {
            self.counters.network.fetch_add(1, Ordering::Relaxed);
            match provider.complete(tier, messages) {
                Err(e) if e.is_retryable() && attempt < self.retry.max_retries => {
                    let delay = self.retry.base_delay * 2u32.pow(attempt);
                    log::warn!("model call failed ({e}); retrying in {delay:?}");
                    thread::sleep(delay);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    /// Completes `messages`, appending the exchange to `transcript`.
    pub fn converse(
        &self,
        stage: &str,
        tier: ModelTier,
        messages: &[ChatMessage],
        transcript: &mut Vec<TranscriptEntry>,
    ) -> Result<String, LlmError> {
        let response = self.complete(tier, messages)?;
        let mut logged = messages.to_vec();
        logged.push(ChatMessage::model(response.clone()));
        transcript.push(TranscriptEntry {
            stage: stage.to_string(),
            tier,
            messages: logged,
        });
        Ok(response)
    }

    /// Sends a single-prompt request whose answer must contain a JSON array,
    /// and hands the array to `parse`.
    ///
    /// A response that has no usable array (or that `parse` rejects) is
    /// re-requested once. `Ok(None)` means both attempts were unusable or the
    /// call itself failed; the caller applies its fallback. Fixture integrity
    /// errors are returned as `Err` so stale fixtures fail loudly.
    pub fn complete_json<T>(
        &self,
        stage: &str,
        tier: ModelTier,
        prompt: String,
        transcript: &mut Vec<TranscriptEntry>,
        parse: impl Fn(Vec<Value>) -> Option<T>,
    ) -> Result<Option<T>, LlmError> {
        let messages = [ChatMessage::user(prompt)];
        for attempt in 0..2 {
            match self.converse(stage, tier, &messages, transcript) {
                Ok(text) => match extract_json_array(&text).ok().and_then(&parse) {
                    Some(v) => return Ok(Some(v)),
                    None => log::warn!("{stage}: unusable model output (attempt {})", attempt + 1),
                },
                Err(e) if e.is_replay_integrity() => return Err(e),
                Err(e) => {
                    log::warn!("{stage}: model call failed: {e}");
                    return Ok(None);
                }
            }
        }
        Ok(None)
    }
}

/// Interprets a JSON array as non-negative integers. Integer-valued strings
/// such as `"3"` are accepted; anything else rejects the whole array.
pub fn parse_index_array(items: Vec<Value>) -> Option<Vec<usize>> {
    items
        .into_iter()
        .map(|v| match v {
            Value::Number(n) => n.as_u64().map(|n| n as usize),
            Value::String(s) => s.trim().parse().ok(),
            _ => None,
        })
        .collect()
}

/// Interprets a JSON array as strings; non-string elements reject the array.
pub fn parse_string_array(items: Vec<Value>) -> Option<Vec<String>> {
    items
        .into_iter()
        .map(|v| match v {
            Value::String(s) => Some(s),
            _ => None,
        })
        .collect()
}
