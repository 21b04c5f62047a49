//! Shared domain types: user questions, pipeline configuration presets and
//! the per-question run trace.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{ChatMessage, ModelTier};

/// A user question as received, never rewritten.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserQuery {
    pub id: String,
    pub text: String,
}

impl UserQuery {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self, ConfigError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ConfigError::EmptyQuestion);
        }
        Ok(Self { id: id.into(), text })
    }
}

/// Which of the no-retrieval baselines to run, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMode {
    #[default]
    None,
    /// Length-constrained raw question sent straight to the deep tier.
    RawQuery,
    /// The drafting prompt without any web content.
    PromptOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub search_enabled: bool,
    pub rephrase_enabled: bool,
    pub url_filter_enabled: bool,
    pub chunk_filter_enabled: bool,
    pub two_turn_enabled: bool,
    pub baseline_mode: BaselineMode,
    pub results_per_query: usize,
    pub max_queries: usize,
    pub fetch_parallelism: usize,
    pub snippet_chars: usize,
    pub reddit_k: usize,
    pub reddit_m1: usize,
    pub reddit_m2: usize,
    /// Few-shot examples for the refinement turn; the bundled set when unset.
    pub examples_path: Option<PathBuf>,
    pub question_timeout_secs: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            search_enabled: true,
            rephrase_enabled: true,
            url_filter_enabled: true,
            chunk_filter_enabled: true,
            two_turn_enabled: true,
            baseline_mode: BaselineMode::None,
            results_per_query: 10,
            max_queries: 2,
            fetch_parallelism: 8,
            snippet_chars: 200,
            reddit_k: 5,
            reddit_m1: 3,
            reddit_m2: 2,
            examples_path: None,
            question_timeout_secs: 120,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("question text is empty")]
    EmptyQuestion,
    #[error("{0} must be a positive integer")]
    NotPositive(&'static str),
    #[error("baseline modes disable search")]
    BaselineWithSearch,
    #[error("chunk filter requires search to be enabled")]
    ChunkFilterWithoutSearch,
    #[error("url filter requires search to be enabled")]
    UrlFilterWithoutSearch,
    #[error("two-turn generation cannot be combined with a baseline mode")]
    TwoTurnWithBaseline,
    #[error("unknown config preset `{0}` (expected one of: {presets})", presets = PRESET_NAMES.join(", "))]
    UnknownPreset(String),
    #[error("reading config file {path}: {message}")]
    File { path: PathBuf, message: String },
}

impl PipelineConfig {
    /// Checks the stage dependencies, returning the first violation.
    pub fn validate(self) -> Result<Self, ConfigError> {
        let positives = [
            ("results_per_query", self.results_per_query),
            ("max_queries", self.max_queries),
            ("fetch_parallelism", self.fetch_parallelism),
            ("snippet_chars", self.snippet_chars),
            ("reddit_k", self.reddit_k),
            ("reddit_m1", self.reddit_m1),
            ("reddit_m2", self.reddit_m2),
        ];
        if let Some((name, _)) = positives.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError::NotPositive(name));
        }
        if self.question_timeout_secs == 0 {
            return Err(ConfigError::NotPositive("question_timeout_secs"));
        }
        if self.baseline_mode != BaselineMode::None && self.search_enabled {
            return Err(ConfigError::BaselineWithSearch);
        }
        if self.chunk_filter_enabled && !self.search_enabled {
            return Err(ConfigError::ChunkFilterWithoutSearch);
        }
        if self.url_filter_enabled && !self.search_enabled {
            return Err(ConfigError::UrlFilterWithoutSearch);
        }
        if self.two_turn_enabled && self.baseline_mode != BaselineMode::None {
            return Err(ConfigError::TwoTurnWithBaseline);
        }
        Ok(self)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, ConfigError> {
        let file_err = |message: String| ConfigError::File {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))
    }

    pub fn question_timeout(&self) -> Duration {
        Duration::from_secs(self.question_timeout_secs)
    }

    fn all_off() -> Self {
        Self {
            search_enabled: false,
            rephrase_enabled: false,
            url_filter_enabled: false,
            chunk_filter_enabled: false,
            two_turn_enabled: false,
            ..Self::default()
        }
    }
}

pub fn validate_config(config: PipelineConfig) -> Result<PipelineConfig, ConfigError> {
    config.validate()
}

/// Ablation presets, in results-table row order.
pub const PRESET_NAMES: [&str; 7] = [
    "baseline-q",
    "baseline-prompt",
    "rag",
    "rag-url-filter",
    "rag-filters",
    "rag-filters-rephrase",
    "final",
];

pub fn named_config(name: &str) -> Result<PipelineConfig, ConfigError> {
    let base = PipelineConfig::all_off();
    let rag = PipelineConfig {
        search_enabled: true,
        ..base.clone()
    };
    let url = PipelineConfig {
        url_filter_enabled: true,
        ..rag.clone()
    };
    let filters = PipelineConfig {
        chunk_filter_enabled: true,
        ..url.clone()
    };
    let rephrase = PipelineConfig {
        rephrase_enabled: true,
        ..filters.clone()
    };
    let config = match name {
        "baseline-q" => PipelineConfig {
            baseline_mode: BaselineMode::RawQuery,
            ..base
        },
        "baseline-prompt" => PipelineConfig {
            baseline_mode: BaselineMode::PromptOnly,
            ..base
        },
        "rag" => rag,
        "rag-url-filter" => url,
        "rag-filters" => filters,
        "rag-filters-rephrase" => rephrase,
        "final" => PipelineConfig {
            two_turn_enabled: true,
            ..rephrase
        },
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    };
    Ok(config)
}

/// One model call as seen by the pipeline: the request messages followed by
/// the model's reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub stage: String,
    pub tier: ModelTier,
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunTrace {
    pub query_id: String,
    pub config_name: String,
    pub planned_queries: Vec<String>,
    pub urls_before_filter: usize,
    pub urls_after_filter: usize,
    pub sections_before_filter: usize,
    pub sections_after_filter: usize,
    pub transcript: Vec<TranscriptEntry>,
    pub answer: String,
    pub citations: Vec<String>,
    #[serde(with = "duration_ms", rename = "wall_time_ms")]
    pub wall_time: Duration,
}

impl RunTrace {
    pub fn new(query_id: &str, config_name: &str) -> Self {
        Self {
            query_id: query_id.to_string(),
            config_name: config_name.to_string(),
            ..Self::default()
        }
    }

    pub fn url_reduction(&self) -> Option<f64> {
        crate::filter::reduction_ratio(self.urls_before_filter, self.urls_after_filter).ok()
    }

    pub fn section_reduction(&self) -> Option<f64> {
        crate::filter::reduction_ratio(self.sections_before_filter, self.sections_after_filter)
            .ok()
    }
}

impl fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineMode::None => "none",
            BaselineMode::RawQuery => "raw-query",
            BaselineMode::PromptOnly => "prompt-only",
        })
    }
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}
