//! Post-hoc attribution: a separate fast-tier call decides which numbered
//! sources directly support the finished answer.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::generate::WebContent;
use crate::llm::{parse_index_array, render, Gateway, LlmError, ModelTier, TemplateId};
use crate::model::TranscriptEntry;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Citation {
    pub source_index: usize,
    pub url: String,
}

/// Maps model-returned source numbers to citations, dropping unknown and
/// repeated numbers while keeping model order.
pub fn resolve_citations(indices: &[usize], sources: &WebContent) -> Vec<Citation> {
    let mut seen = HashSet::new();
    indices
        .iter()
        .filter(|i| seen.insert(**i))
        .filter_map(|&i| {
            sources.sources.get(&i).map(|url| Citation {
                source_index: i,
                url: url.clone(),
            })
        })
        .collect()
}

pub fn verify_citations(
    gateway: &Gateway,
    answer: &str,
    sources: &WebContent,
    transcript: &mut Vec<TranscriptEntry>,
) -> Result<Vec<Citation>, LlmError> {
    if answer.trim().is_empty() || sources.sources.is_empty() {
        return Ok(Vec::new());
    }
    let prompt = render(
        TemplateId::Citation,
        &[("AI_ANSWER", answer), ("WEB_CONTENT", &sources.text)],
    )
    .expect("citation bindings are complete");
    let picked = gateway.complete_json("citation", ModelTier::Fast, prompt, transcript, parse_index_array)?;
    Ok(match picked {
        Some(indices) => resolve_citations(&indices, sources),
        None => {
            log::warn!("citation verification failed; returning no citations");
            Vec::new()
        }
    })
}
