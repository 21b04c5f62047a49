//! Query planning: rewrite the user question into at most two concise search
//! queries on the fast tier.

use serde::{Deserialize, Serialize};

use crate::llm::{parse_string_array, render, Gateway, LlmError, ModelTier, TemplateId};
use crate::model::{TranscriptEntry, UserQuery};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SearchQuery(String);

impl SearchQuery {
    /// Trims `text`; `None` when nothing remains.
    pub fn new(text: &str) -> Option<Self> {
        let t = text.trim();
        (!t.is_empty()).then(|| Self(t.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// The unplanned route: the raw question is the only query.
pub fn raw_query(question: &UserQuery) -> Vec<SearchQuery> {
    vec![SearchQuery::new(&question.text).expect("UserQuery text is non-empty")]
}

/// Cleans model-proposed queries: trim, drop empties, dedupe preserving
/// order, keep at most `max_queries`.
pub fn normalize_queries(proposed: &[String], max_queries: usize) -> Vec<SearchQuery> {
    let mut out: Vec<SearchQuery> = Vec::new();
    for q in proposed.iter().filter_map(|s| SearchQuery::new(s)) {
        if out.len() == max_queries {
            break;
        }
        if !out.contains(&q) {
            out.push(q);
        }
    }
    out
}

pub fn plan_queries(
    gateway: &Gateway,
    question: &UserQuery,
    max_queries: usize,
    transcript: &mut Vec<TranscriptEntry>,
) -> Result<Vec<SearchQuery>, LlmError> {
    let prompt = render(TemplateId::QueryPlan, &[("USER_QUESTION", &question.text)])
        .expect("query-plan bindings are complete");
    let planned = gateway.complete_json("query-plan", ModelTier::Fast, prompt, transcript, |items| {
        let queries = normalize_queries(&parse_string_array(items)?, max_queries);
        (!queries.is_empty()).then_some(queries)
    })?;
    Ok(planned.unwrap_or_else(|| {
        log::warn!("query planning failed for {}; searching the raw question", question.id);
        raw_query(question)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn truncates_to_max() {
        let got = normalize_queries(&s(&["a", "b", "c"]), 2);
        assert_eq!(got, vec![SearchQuery::new("a").unwrap(), SearchQuery::new("b").unwrap()]);
    }

    #[test]
    fn trims_drops_empty_and_dedupes() {
        let got = normalize_queries(&s(&["  x ", "", "x", "   ", "y"]), 2);
        assert_eq!(got.iter().map(SearchQuery::as_str).collect::<Vec<_>>(), ["x", "y"]);
    }

    #[test]
    fn dedupe_happens_before_truncation() {
        let got = normalize_queries(&s(&["x", "x", "y"]), 2);
        assert_eq!(got.len(), 2);
    }
}
