//! Rendered templates against the golden files in `tests/golden`.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

use hifi_rag::llm::{render_template, TemplateId};

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn bindings() -> HashMap<String, String> {
    let text = fs::read_to_string(golden_dir().join("bindings.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub const TEMPLATES: [(TemplateId, &str); 8] = [
    (TemplateId::QueryPlan, "query_plan"),
    (TemplateId::UrlFilter, "url_filter"),
    (TemplateId::ChunkFilter, "chunk_filter"),
    (TemplateId::Draft, "draft"),
    (TemplateId::DraftNoSearch, "draft_no_search"),
    (TemplateId::Refine, "refine"),
    (TemplateId::Citation, "citation"),
    (TemplateId::BaselineQ, "baseline_q"),
];

/// Returns the names of templates whose rendering differs from the golden.
pub fn mismatches() -> Vec<String> {
    let all = bindings();
    let mut bad = Vec::new();
    for (id, name) in TEMPLATES {
        let vars: HashMap<&str, &str> = id
            .placeholders()
            .iter()
            .map(|p| (*p, all[*p].as_str()))
            .collect();
        let rendered = render_template(id, &vars).unwrap();
        let golden = fs::read_to_string(golden_dir().join(format!("{name}.txt")))
            .unwrap()
            .replace("\r\n", "\n");
        if rendered != golden {
            bad.push(name.to_string());
        }
    }
    bad
}

