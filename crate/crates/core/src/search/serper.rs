//! Live search backend speaking the Serper Google-search JSON API.

use std::time::Duration;

use serde_json::{json, Value};

use super::{RawHit, SearchBackend, SearchError};

pub const DEFAULT_ENDPOINT: &str = "https://google.serper.dev/search";

pub struct SerperBackend {
    api_key: String,
    endpoint: String,
    agent: ureq::Agent,
}

impl SerperBackend {
    pub fn new(api_key: String, endpoint: String) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(20)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            api_key,
            endpoint,
            agent,
        }
    }

    /// Reads `HIFI_SEARCH_API_KEY` and optional `HIFI_SEARCH_ENDPOINT`.
    pub fn from_env() -> Result<Self, SearchError> {
        let key = std::env::var("HIFI_SEARCH_API_KEY")
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| SearchError::NoBackend("HIFI_SEARCH_API_KEY is not set".into()))?;
        let endpoint = std::env::var("HIFI_SEARCH_ENDPOINT")
            .ok()
            .filter(|e| !e.is_empty())
            .unwrap_or_else(|| DEFAULT_ENDPOINT.to_string());
        Ok(Self::new(key, endpoint))
    }
}

pub(crate) fn classify_status(status: u16, body: String) -> SearchError {
    let lower = body.to_ascii_lowercase();
    match status {
        401 | 403 => SearchError::Auth(status),
        402 => SearchError::QuotaExceeded(body),
        _ if lower.contains("quota") || lower.contains("credits") => SearchError::QuotaExceeded(body),
        _ => SearchError::Http { status, body },
    }
}

pub(crate) fn parse_organic(body: &Value) -> Vec<RawHit> {
    body.get("organic")
        .and_then(Value::as_array)
        .map(|items| {
            items
                .iter()
                .filter_map(|item| {
                    Some(RawHit {
                        url: item.get("link")?.as_str()?.to_string(),
                        title: item.get("title").and_then(Value::as_str).unwrap_or_default().to_string(),
                        preview: item.get("snippet").and_then(Value::as_str).unwrap_or_default().to_string(),
                    })
                })
                .collect()
        })
        .unwrap_or_default()
}

impl SearchBackend for SerperBackend {
    fn search(&self, query: &str, n: usize) -> Result<Vec<RawHit>, SearchError> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("X-API-KEY", &self.api_key)
            .send_json(json!({ "q": query, "num": n }))
            .map_err(|e| SearchError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| SearchError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, text));
        }
        let body: Value =
            serde_json::from_str(&text).map_err(|e| SearchError::Transport(format!("invalid JSON: {e}")))?;
        Ok(parse_organic(&body))
    }

    fn name(&self) -> &str {
        "serper"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_organic_results() {
        let body = json!({"organic": [
            {"link": "https://a.com", "title": "A", "snippet": "sa"},
            {"title": "no link"},
            {"link": "https://b.com"}
        ]});
        let hits = parse_organic(&body);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[1].title, "");
        assert!(parse_organic(&json!({})).is_empty());
    }

    #[test]
    fn status_classification() {
        assert_eq!(classify_status(403, String::new()), SearchError::Auth(403));
        assert!(matches!(classify_status(400, "Not enough credits".into()), SearchError::QuotaExceeded(_)));
        assert!(matches!(classify_status(429, "Quota exceeded for today".into()), SearchError::QuotaExceeded(_)));
        assert!(matches!(classify_status(503, "busy".into()), SearchError::Http { status: 503, .. }));
    }
}
