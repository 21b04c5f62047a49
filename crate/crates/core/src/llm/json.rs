//! Locating JSON arrays in free-form model output.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("no JSON array found in model output")]
    NoArrayFound,
    #[error("malformed JSON array in model output: {0}")]
    MalformedArray(String),
}

/// Returns the first valid top-level JSON array in `text`.
///
/// Markdown code fences are stripped first. Each `[` is tried in turn: its
/// matching `]` is located (string literals are skipped while matching), and
/// the span is parsed. A balanced span that fails to parse is skipped, so
/// prose such as `[number]` before the real answer does not hide it. An
/// unclosed bracket ends the scan.
pub fn extract_json_array(text: &str) -> Result<Vec<Value>, ExtractError> {
    let body = strip_code_fences(text);
    let bytes = body.as_bytes();
    let mut pos = 0;
    let mut last_error = None;

    while let Some(offset) = body[pos..].find('[') {
        let start = pos + offset;
        let Some(end) = matching_bracket(bytes, start) else {
            return Err(ExtractError::MalformedArray(format!(
                "unbalanced `[` at byte {start}"
            )));
        };
        match serde_json::from_str::<Value>(&body[start..=end]) {
            Ok(Value::Array(items)) => return Ok(items),
            Ok(_) => unreachable!("span starts with `[`"),
            Err(e) => {
                last_error = Some(e.to_string());
                pos = end + 1;
            }
        }
    }

    match last_error {
        Some(e) => Err(ExtractError::MalformedArray(e)),
        None => Err(ExtractError::NoArrayFound),
    }
}

fn strip_code_fences(text: &str) -> &str {
    let trimmed = text.trim();
    let Some(inner) = trimmed.strip_prefix("```") else {
        return text;
    };
    // Drop the info string (`json`, etc.) on the opening fence line.
    let inner = match inner.find('\n') {
        Some(nl) => &inner[nl + 1..],
        None => inner,
    };
    inner.strip_suffix("```").unwrap_or(inner)
}

fn matching_bracket(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'[' => depth += 1,
            b']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}
