//! Helpers for running the bundled replay fixture set.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use hifi_rag::eval::{load_jsonl, QAPair};
use hifi_rag::model::{PipelineConfig, RunTrace};
use hifi_rag::pipeline::{Paths, Pipeline};
use serde::Deserialize;

use super::scripted::replay_dir;

pub fn paths(trace_dir: Option<&Path>) -> Paths {
    let root = replay_dir();
    Paths {
        cache_dir: root.join("pages"),
        fixture_dir: root,
        trace_dir: trace_dir.map(Path::to_path_buf),
    }
}

pub fn pipeline(trace_dir: Option<&Path>) -> Pipeline {
    Pipeline::replay(&paths(trace_dir))
}

pub fn dataset() -> Vec<QAPair> {
    load_jsonl(&replay_dir().join("dataset.jsonl")).unwrap()
}

pub fn dataset_path() -> PathBuf {
    replay_dir().join("dataset.jsonl")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct GoldenCounts {
    pub fast_calls: usize,
    pub deep_calls: usize,
    pub searches: usize,
    pub fetches: usize,
}

pub fn golden_interactions() -> BTreeMap<String, GoldenCounts> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/interactions.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Model stages a question must go through under `config`, given how many
/// URLs survived search, how many pages were ranked and whether any
/// source reached generation.
pub fn expected_stages(config: &PipelineConfig, trace: &RunTrace, ranked_pages: usize) -> Vec<&'static str> {
    use hifi_rag::BaselineMode;
    if config.baseline_mode != BaselineMode::None {
        return vec!["baseline"];
    }
    let mut stages = Vec::new();
    if config.rephrase_enabled {
        stages.push("query-plan");
    }
    if config.url_filter_enabled && trace.urls_before_filter > 0 {
        stages.push("url-filter");
    }
    if config.chunk_filter_enabled {
        stages.extend(std::iter::repeat_n("chunk-filter", ranked_pages));
    }
    stages.push("draft");
    if config.two_turn_enabled {
        stages.push("refine");
    }
    if !trace.citations.is_empty() || trace.transcript.iter().any(|e| e.stage == "citation") {
        stages.push("citation");
    }
    stages
}

/// Output of one `batch` invocation of the binary in replay mode.
pub struct BatchRun {
    pub status: i32,
    pub stderr: String,
    pub predictions: Vec<u8>,
    /// Trace files keyed by relative path, with `wall_time_ms` removed.
    pub traces: BTreeMap<String, String>,
}

pub fn strip_wall_time(trace_json: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(trace_json).unwrap();
    v.as_object_mut().unwrap().remove("wall_time_ms");
    serde_json::to_string_pretty(&v).unwrap()
}

pub fn run_batch_binary(work: &Path, config: &str) -> BatchRun {
    let root = replay_dir();
    let traces = work.join("traces");
    let out = work.join("predictions.jsonl");
    let output = Command::new(env!("CARGO_BIN_EXE_hifi-rag"))
        .env_remove("HIFI_LLM_API_KEY")
        .env("RUST_LOG", "error")
        .args(["--mode", "replay", "--fixture-dir"])
        .arg(&root)
        .arg("--cache-dir")
        .arg(root.join("pages"))
        .arg("--trace-dir")
        .arg(&traces)
        .args(["batch", "--config", config, "--input"])
        .arg(dataset_path())
        .arg("--output")
        .arg(&out)
        .output()
        .expect("binary runs");
    let mut trace_files = BTreeMap::new();
    collect(&traces, &traces, &mut trace_files);
    BatchRun {
        status: output.status.code().unwrap_or(-1),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        predictions: fs::read(&out).unwrap_or_default(),
        traces: trace_files,
    }
}

fn collect(base: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
    let Ok(entries) = fs::read_dir(dir) else { return };
    for e in entries {
        let p = e.unwrap().path();
        if p.is_dir() {
            collect(base, &p, out);
        } else {
            let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
            out.insert(rel, strip_wall_time(&fs::read_to_string(&p).unwrap()));
        }
    }
}
