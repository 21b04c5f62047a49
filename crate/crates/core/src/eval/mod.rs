//! QA evaluation: JSONL datasets, ROUGE-L scoring, external score joins and
//! the ablation runner.

pub mod ablation;
pub mod rouge;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use ablation::{run_ablation, AblationReport, AblationRow};
pub use rouge::{lcs_length, rouge_l, rouge_l_f1, tokenize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub id: String,
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScore {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub id: String,
    pub rouge_l_f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_name: String,
    pub sample_count: usize,
    pub mean_rouge_l: f64,
    pub mean_external: Option<f64>,
    /// Samples that had an external score.
    pub external_coverage: usize,
    /// Samples whose prediction carried an error and scored 0.
    pub failed_samples: usize,
    pub per_sample: Vec<SampleScore>,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Line { path: String, line: usize, message: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("prediction id `{0}` has no reference")]
    UnmatchedId(String),
}

/// Reads non-blank lines of a JSONL file as `(line_number, value)`.
fn read_jsonl_values(path: &Path) -> Result<Vec<(usize, Value)>, EvalError> {
    let p = path.display().to_string();
    let file = fs::File::open(path).map_err(|e| EvalError::Io {
        path: p.clone(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| EvalError::Io {
            path: p.clone(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| EvalError::Line {
            path: p.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

fn line_err(path: &Path, line: usize, message: impl Into<String>) -> EvalError {
    EvalError::Line {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn string_field(v: &Value, key: &str) -> Option<String> {
    match v.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn required_text(v: &Value, key: &str, path: &Path, line: usize) -> Result<String, EvalError> {
    match v.get(key) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(line_err(path, line, format!("`{key}` is empty"))),
        Some(_) => Err(line_err(path, line, format!("`{key}` must be a string"))),
        None => Err(line_err(path, line, format!("missing `{key}`"))),
    }
}

fn check_unique<'a>(ids: impl IntoIterator<Item = &'a String>) -> Result<(), EvalError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(EvalError::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

/// Loads `{id?, question, answer}` lines. A missing id becomes the 1-based
/// line number.
pub fn load_jsonl(path: &Path) -> Result<Vec<QAPair>, EvalError> {
    let pairs = read_jsonl_values(path)?
        .into_iter()
        .map(|(line, v)| {
            Ok(QAPair {
                id: string_field(&v, "id").unwrap_or_else(|| line.to_string()),
                question: required_text(&v, "question", path, line)?,
                answer: required_text(&v, "answer", path, line)?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_unique(pairs.iter().map(|p| &p.id))?;
    Ok(pairs)
}

/// Like [`load_jsonl`] but `answer` is optional (batch input).
pub fn load_questions(path: &Path) -> Result<Vec<(String, String)>, EvalError> {
    let qs = read_jsonl_values(path)?
        .into_iter()
        .map(|(line, v)| {
            Ok((
                string_field(&v, "id").unwrap_or_else(|| line.to_string()),
                required_text(&v, "question", path, line)?,
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;
    check_unique(qs.iter().map(|(id, _)| id))?;
    Ok(qs)
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>, EvalError> {
    read_jsonl_values(path)?
        .into_iter()
        .map(|(line, v)| serde_json::from_value(v).map_err(|e| line_err(path, line, e.to_string())))
        .collect()
}

pub fn load_external_scores(path: &Path) -> Result<Vec<ExternalScore>, EvalError> {
    read_jsonl_values(path)?
        .into_iter()
        .map(|(line, v)| {
            let id = string_field(&v, "id").ok_or_else(|| line_err(path, line, "missing `id`"))?;
            let score = v
                .get("score")
                .and_then(Value::as_f64)
                .ok_or_else(|| line_err(path, line, "missing numeric `score`"))?;
            Ok(ExternalScore { id, score })
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> std::io::Result<()> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("row serializes"));
        out.push('\n');
    }
    fs::write(path, out)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Scores each prediction against its reference with ROUGE-L F1 and joins
/// external scores by id. Output is sorted by id.
pub fn evaluate(
    config_name: &str,
    predictions: &[Prediction],
    references: &[QAPair],
    external_scores: Option<&[ExternalScore]>,
) -> Result<EvalReport, EvalError> {
    check_unique(predictions.iter().map(|p| &p.id))?;
    let refs: HashMap<&str, &QAPair> = references.iter().map(|r| (r.id.as_str(), r)).collect();
    let external: HashMap<&str, f64> = match external_scores {
        Some(scores) => {
            check_unique(scores.iter().map(|s| &s.id))?;
            scores.iter().map(|s| (s.id.as_str(), s.score)).collect()
        }
        None => HashMap::new(),
    };

    let mut jobs = Vec::with_capacity(predictions.len());
    for p in predictions {
        let r = refs
            .get(p.id.as_str())
            .ok_or_else(|| EvalError::UnmatchedId(p.id.clone()))?;
        jobs.push((p, *r));
    }
    let parallelism = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut per_sample = crate::exec::bounded_map(&jobs, parallelism, |(p, r)| SampleScore {
        id: p.id.clone(),
        rouge_l_f1: if p.error.is_some() { 0.0 } else { rouge_l_f1(&p.answer, &r.answer) },
        external_score: external.get(p.id.as_str()).copied(),
    });
    per_sample.sort_by(|a, b| a.id.cmp(&b.id));

    let failed_samples = predictions.iter().filter(|p| p.error.is_some()).count();
    Ok(EvalReport {
        config_name: config_name.to_string(),
        sample_count: per_sample.len(),
        mean_rouge_l: mean(per_sample.iter().map(|s| s.rouge_l_f1)).unwrap_or(0.0),
        mean_external: mean(per_sample.iter().filter_map(|s| s.external_score)),
        external_coverage: per_sample.iter().filter(|s| s.external_score.is_some()).count(),
        failed_samples,
        per_sample,
    })
}

pub const CONFIG_HEADER: &str = "System Configuration";
pub const ROUGE_HEADER: &str = "ROUGE-L (F1)";
pub const DEFAULT_EXTERNAL_LABEL: &str = "DeBERTaScore (F1)";

pub fn render_table(reports: &[EvalReport]) -> String {
    render_table_with(reports, DEFAULT_EXTERNAL_LABEL)
}

/// Aligned plain-text table: configuration, ROUGE-L and, when any report has
/// one, the external score under `external_label`.
pub fn render_table_with(reports: &[EvalReport], external_label: &str) -> String {
    let with_external = reports.iter().any(|r| r.mean_external.is_some());
    let name_w = reports
        .iter()
        .map(|r| r.config_name.len())
        .chain([CONFIG_HEADER.len()])
        .max()
        .unwrap_or(0);
    let rouge_w = ROUGE_HEADER.len();
    let ext_w = external_label.len().max(6);
    let mut header = format!("{CONFIG_HEADER:<name_w$}  {ROUGE_HEADER:>rouge_w$}");
    if with_external {
        header.push_str(&format!("  {external_label:>ext_w$}"));
    }
    let mut lines = vec![header.clone(), "-".repeat(header.len())];
    for r in reports {
        let mut line = format!("{:<name_w$}  {:>rouge_w$.4}", r.config_name, r.mean_rouge_l);
        if with_external {
            let ext = r.mean_external.map_or("-".to_string(), |m| format!("{m:.4}"));
            line.push_str(&format!("  {ext:>ext_w$}"));
        }
        lines.push(line);
    }
    lines.join("\n") + "\n"
}
