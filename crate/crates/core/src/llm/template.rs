//! Prompt templates and placeholder substitution.
//!
//! Templates are stored verbatim under `templates/`. Substitution is a single
//! pass over the template text, so bound values that happen to contain a
//! placeholder token are never expanded again.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

const QUERY_PLAN: &str = include_str!("../../templates/query_plan.txt");
const URL_FILTER: &str = include_str!("../../templates/url_filter.txt");
const CHUNK_FILTER: &str = include_str!("../../templates/chunk_filter.txt");
const DRAFT: &str = include_str!("../../templates/draft.txt");
const REFINE: &str = include_str!("../../templates/refine.txt");
const CITATION: &str = include_str!("../../templates/citation.txt");
const BASELINE_Q: &str = include_str!("../../templates/baseline_q.txt");

/// Separator that opens the web-content block of the drafting prompt.
const WEB_BLOCK_SEPARATOR: &str = "\n-----------\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TemplateId {
    QueryPlan,
    UrlFilter,
    ChunkFilter,
    Draft,
    /// The drafting prompt with its web-content block removed.
    DraftNoSearch,
    Refine,
    Citation,
    BaselineQ,
}

pub const ALL_TEMPLATES: [TemplateId; 8] = [
    TemplateId::QueryPlan,
    TemplateId::UrlFilter,
    TemplateId::ChunkFilter,
    TemplateId::Draft,
    TemplateId::DraftNoSearch,
    TemplateId::Refine,
    TemplateId::Citation,
    TemplateId::BaselineQ,
];

impl TemplateId {
    pub fn name(self) -> &'static str {
        match self {
            TemplateId::QueryPlan => "query-plan",
            TemplateId::UrlFilter => "url-filter",
            TemplateId::ChunkFilter => "chunk-filter",
            TemplateId::Draft => "draft",
            TemplateId::DraftNoSearch => "draft-no-search",
            TemplateId::Refine => "refine",
            TemplateId::Citation => "citation",
            TemplateId::BaselineQ => "baseline-q",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            TemplateId::QueryPlan => QUERY_PLAN,
            TemplateId::UrlFilter => URL_FILTER,
            TemplateId::ChunkFilter => CHUNK_FILTER,
            TemplateId::Draft => DRAFT,
            TemplateId::DraftNoSearch => DRAFT
                .split_once(WEB_BLOCK_SEPARATOR)
                .map(|(head, _)| head)
                .unwrap_or(DRAFT),
            TemplateId::Refine => REFINE,
            TemplateId::Citation => CITATION,
            TemplateId::BaselineQ => BASELINE_Q,
        }
    }

    /// Placeholder names this template expects, without brackets.
    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            TemplateId::QueryPlan | TemplateId::DraftNoSearch | TemplateId::BaselineQ => {
                &["USER_QUESTION"]
            }
            TemplateId::UrlFilter => &["USER_QUESTION", "SEARCH_RESULT"],
            TemplateId::ChunkFilter => {
                &["USER_QUESTION", "WEB_PREVIEW_CONTENT", "SECTION_PREVIEWS"]
            }
            TemplateId::Draft => &["USER_QUESTION", "WEB_CONTENT"],
            TemplateId::Refine => &["VAL_EXAMPLES"],
            TemplateId::Citation => &["AI_ANSWER", "WEB_CONTENT"],
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TemplateId {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_TEMPLATES
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| TemplateError::UnknownTemplate(s.to_string()))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template `{template}` requires a binding for [{placeholder}]")]
    MissingBinding {
        template: &'static str,
        placeholder: &'static str,
    },
}

/// Renders `template` with `bindings` (keys are placeholder names without
/// brackets). Extra bindings are ignored. Output uses `\n` line endings.
pub fn render_template(
    template: TemplateId,
    bindings: &HashMap<&str, &str>,
) -> Result<String, TemplateError> {
    let names = template.placeholders();
    for name in names {
        if !bindings.contains_key(name) {
            return Err(TemplateError::MissingBinding {
                template: template.name(),
                placeholder: name,
            });
        }
    }

    let text = template.text();
    let mut out = String::with_capacity(text.len() + 256);
    let mut rest = text;
    'scan: while let Some(open) = rest.find('[') {
        let after = &rest[open + 1..];
        for name in names {
            if after.starts_with(name) && after[name.len()..].starts_with(']') {
                out.push_str(&rest[..open]);
                out.push_str(bindings[name]);
                rest = &after[name.len() + 1..];
                continue 'scan;
            }
        }
        out.push_str(&rest[..=open]);
        rest = after;
    }
    out.push_str(rest);
    Ok(normalize_newlines(&out))
}

/// Convenience wrapper over [`render_template`] for call sites with a fixed
/// binding list.
pub fn render(template: TemplateId, bindings: &[(&str, &str)]) -> Result<String, TemplateError> {
    let map: HashMap<&str, &str> = bindings.iter().copied().collect();
    render_template(template, &map)
}

fn normalize_newlines(s: &str) -> String {
    if s.contains('\r') {
        s.replace("\r\n", "\n").replace('\r', "\n")
    } else {
        s.to_string()
    }
}
