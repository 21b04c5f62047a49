//! Randomised model replies for the URL and section filter contracts.

use std::collections::HashSet;
use std::sync::Arc;

use hifi_rag::filter::rank_sections;
use hifi_rag::ingest::{PageDocument, PageKind, Section};
use hifi_rag::llm::{ChatMessage, Gateway, LlmError, LlmProvider, ModelTier};
use hifi_rag::search::{filter_urls, normalize_url, SearchHit};
use hifi_rag::UserQuery;
use proptest::prelude::*;
use serde_json::Value;

pub struct Fixed(pub String);

impl LlmProvider for Fixed {
    fn complete(&self, _: ModelTier, _: &[ChatMessage]) -> Result<String, LlmError> {
        Ok(self.0.clone())
    }

    fn name(&self) -> &str {
        "fixed"
    }
}

pub fn gateway(reply: String) -> Gateway {
    Gateway::live(Arc::new(Fixed(reply)))
}

pub fn hits(n: usize) -> Vec<SearchHit> {
    (0..n)
        .map(|i| SearchHit {
            url: format!("https://site{}.example/page/{i}", i % 3),
            title: format!("Title {i}"),
            preview: format!("Preview {i}"),
            source_query: "q".into(),
            rank: i + 1,
        })
        .collect()
}

pub fn page(n: usize) -> PageDocument {
    PageDocument {
        url: "https://p.example/".into(),
        title: "P".into(),
        preview: "P\nlead".into(),
        sections: (0..n)
            .map(|i| Section::new(i, vec![format!("H{i}")], 2, format!("content {i}"), 200))
            .collect(),
        kind: PageKind::Web,
    }
}

/// Plain JSON, fenced JSON, JSON inside prose, or an unbalanced mess.
pub fn wrap(json: String, style: u8) -> String {
    match style % 4 {
        0 => json,
        1 => format!("```json\n{json}\n```"),
        2 => format!("Sure! Here you go: {json} Hope that helps."),
        _ => format!("[not json at all {json}"),
    }
}

#[derive(Debug, Clone)]
pub enum UrlItem {
    Known(usize),
    KnownVariant(usize),
    Hallucinated(u16),
    NotAString(i64),
}

pub fn url_items() -> impl Strategy<Value = Vec<UrlItem>> {
    prop::collection::vec(
        prop_oneof![
            (0usize..12).prop_map(UrlItem::Known),
            (0usize..12).prop_map(UrlItem::KnownVariant),
            any::<u16>().prop_map(UrlItem::Hallucinated),
            any::<i64>().prop_map(UrlItem::NotAString),
        ],
        0..16,
    )
}

fn render_urls(items: &[UrlItem], input: &[SearchHit]) -> String {
    let values: Vec<Value> = items
        .iter()
        .map(|item| match item {
            UrlItem::Known(i) if !input.is_empty() => input[i % input.len()].url.clone().into(),
            UrlItem::KnownVariant(i) if !input.is_empty() => format!("{}/#frag", input[i % input.len()].url).into(),
            UrlItem::NotAString(n) => (*n).into(),
            UrlItem::Hallucinated(n) => format!("https://made-up{n}.example/").into(),
            _ => "https://nothing.example/".into(),
        })
        .collect();
    serde_json::to_string(&values).unwrap()
}

pub fn index_items() -> impl Strategy<Value = Vec<Value>> {
    prop::collection::vec(
        prop_oneof![
            (0u64..20).prop_map(Value::from),
            (-5i64..0).prop_map(Value::from),
            (0u64..20).prop_map(|n| Value::from(n.to_string())),
            Just(Value::from(1.5)),
        ],
        0..16,
    )
}

pub fn url_filter_case(n: usize, items: &[UrlItem], style: u8) -> Result<(), String> {
    let input = hits(n);
    let reply = wrap(render_urls(items, &input), style);
    let q = UserQuery::new("t", "question").unwrap();
    let out = filter_urls(&gateway(reply.clone()), &q, &input, &mut Vec::new()).map_err(|e| e.to_string())?;
    if !out.iter().all(|h| input.contains(h)) {
        return Err(format!("output not a subset of input for reply {reply}"));
    }
    let keys: HashSet<String> = out.iter().map(|h| normalize_url(&h.url)).collect();
    if keys.len() != out.len() {
        return Err(format!("duplicate urls in output for reply {reply}"));
    }
    Ok(())
}

pub fn ranking_case(n: usize, items: &[Value], style: u8) -> Result<(), String> {
    let reply = wrap(serde_json::to_string(items).unwrap(), style);
    let q = UserQuery::new("t", "question").unwrap();
    let out = rank_sections(&gateway(reply.clone()), &q, &page(n), &mut Vec::new()).map_err(|e| e.to_string())?;
    if out.iter().any(|&i| i >= n) {
        return Err(format!("out-of-range index in {out:?} for reply {reply}"));
    }
    let unique: HashSet<usize> = out.iter().copied().collect();
    if unique.len() != out.len() {
        return Err(format!("duplicate index in {out:?} for reply {reply}"));
    }
    Ok(())
}
