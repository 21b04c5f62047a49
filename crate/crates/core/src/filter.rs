//! Section reranking on the fast tier: per page, the model sees only section
//! headings and opening snippets and returns the useful indices, best first.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{PageDocument, Section};
use crate::llm::{parse_index_array, render, Gateway, LlmError, ModelTier, TemplateId};
use crate::model::{TranscriptEntry, UserQuery};
use crate::search::one_line;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteContext {
    pub title: String,
    pub url: String,
    pub preview: String,
    /// Most useful first.
    pub kept_sections: Vec<Section>,
}

/// `INDEX. HEADING_PATH — SNIPPET` per section.
pub fn format_section_previews(page: &PageDocument) -> String {
    page.sections
        .iter()
        .map(|s| format!("{}. {} — {}", s.index, s.heading_label(), one_line(&s.snippet)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Drops out-of-range indices and repeats, keeping first occurrences.
pub fn sanitize_indices(indices: &[usize], len: usize) -> Vec<usize> {
    let mut seen = HashSet::new();
    indices
        .iter()
        .copied()
        .filter(|&i| i < len && seen.insert(i))
        .collect()
}

pub fn rank_sections(
    gateway: &Gateway,
    question: &UserQuery,
    page: &PageDocument,
    transcript: &mut Vec<TranscriptEntry>,
) -> Result<Vec<usize>, LlmError> {
    let count = page.sections.len();
    let previews = format_section_previews(page);
    let prompt = render(
        TemplateId::ChunkFilter,
        &[
            ("USER_QUESTION", &question.text),
            ("WEB_PREVIEW_CONTENT", &page.preview),
            ("SECTION_PREVIEWS", &previews),
        ],
    )
    .expect("chunk-filter bindings are complete");
    let ranked = gateway.complete_json("chunk-filter", ModelTier::Fast, prompt, transcript, parse_index_array)?;
    Ok(match ranked {
        Some(indices) => sanitize_indices(&indices, count),
        None => {
            log::warn!("section ranking failed for {}; keeping all {count} sections", page.url);
            (0..count).collect()
        }
    })
}

pub fn apply_filter(page: &PageDocument, indices: &[usize]) -> SiteContext {
    SiteContext {
        title: page.title.clone(),
        url: page.url.clone(),
        preview: page.preview.clone(),
        kept_sections: indices.iter().map(|&i| page.sections[i].clone()).collect(),
    }
}

/// All sections in document order.
pub fn pass_through(page: &PageDocument) -> SiteContext {
    let all: Vec<usize> = (0..page.sections.len()).collect();
    apply_filter(page, &all)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RatioError {
    #[error("reduction ratio needs at least one item before filtering")]
    Empty,
    #[error("after-count {after} exceeds before-count {before}")]
    Grew { before: usize, after: usize },
}

/// Fraction of items removed by a filter.
pub fn reduction_ratio(before: usize, after: usize) -> Result<f64, RatioError> {
    if before == 0 {
        return Err(RatioError::Empty);
    }
    if after > before {
        return Err(RatioError::Grew { before, after });
    }
    Ok((before - after) as f64 / before as f64)
}

/// Pages with nothing kept are dropped; if that would drop every page, each
/// page keeps its first section instead.
pub fn drop_empty_sites(pages: &[PageDocument], sites: Vec<SiteContext>) -> Vec<SiteContext> {
    if sites.iter().all(|s| s.kept_sections.is_empty()) {
        return pages
            .iter()
            .filter(|p| !p.sections.is_empty())
            .map(|p| apply_filter(p, &[0]))
            .collect();
    }
    sites.into_iter().filter(|s| !s.kept_sections.is_empty()).collect()
}
