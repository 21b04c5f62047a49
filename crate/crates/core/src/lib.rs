//! Retrieval-augmented question answering with hierarchical relevance
//! filtering: query planning, web retrieval, URL and section gating on a fast
//! model tier, two-turn generation on a deep tier, and post-hoc citation
//! verification. Every external call goes through a record/replay layer so
//! whole runs can be reproduced offline.

pub mod cite;
pub mod cli;
pub mod eval;
pub mod exec;
pub mod filter;
pub mod generate;
pub mod ingest;
pub mod llm;
pub mod mode;
pub mod model;
pub mod pipeline;
pub mod planner;
pub mod search;

pub use cite::Citation;
pub use llm::{ChatMessage, Gateway, LlmError, ModelTier};
pub use mode::Mode;
pub use model::{named_config, BaselineMode, PipelineConfig, RunTrace, UserQuery, PRESET_NAMES};
pub use pipeline::{FinalAnswer, Pipeline, PipelineError};
