//! Web search: query execution, hit merging, and the pre-fetch URL filter.

pub mod serper;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::llm::{parse_string_array, render, Gateway, LlmError, ModelTier, TemplateId};
use crate::mode::Mode;
use crate::model::{TranscriptEntry, UserQuery};
use crate::planner::SearchQuery;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub url: String,
    pub title: String,
    pub preview: String,
    pub source_query: String,
    /// 1-based position within the result list of `source_query`.
    pub rank: usize,
}

/// A search result as stored in fixtures and returned by backends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawHit {
    pub url: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub preview: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("search transport error: {0}")]
    Transport(String),
    #[error("search endpoint rejected credentials (HTTP {0})")]
    Auth(u16),
    #[error("search quota exceeded: {0}")]
    QuotaExceeded(String),
    #[error("HTTP {status} from search endpoint: {body}")]
    Http { status: u16, body: String },
    #[error("no recorded search results for query `{0}`")]
    ReplayMiss(String),
    #[error("search fixture: {0}")]
    Fixture(String),
    #[error("no live search backend configured ({0})")]
    NoBackend(String),
}

impl SearchError {
    fn is_retryable(&self) -> bool {
        match self {
            SearchError::Transport(_) | SearchError::Auth(_) => true,
            SearchError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

pub trait SearchBackend: Send + Sync {
    fn search(&self, query: &str, n: usize) -> Result<Vec<RawHit>, SearchError>;

    fn name(&self) -> &str;
}

/// Recorded results, one `<sha256(query)>.json` file per query text holding
/// a JSON list of `{url, title, preview}`.
#[derive(Debug, Clone)]
pub struct SearchFixtures {
    dir: PathBuf,
}

impl SearchFixtures {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, query: &str) -> PathBuf {
        let key = hex::encode(Sha256::digest(query.as_bytes()));
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, query: &str) -> Result<Option<Vec<RawHit>>, SearchError> {
        let path = self.path_for(query);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| SearchError::Fixture(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(SearchError::Fixture(format!("{}: {e}", path.display()))),
        }
    }

    pub fn put(&self, query: &str, hits: &[RawHit]) -> Result<(), SearchError> {
        let path = self.path_for(query);
        let io = |e: std::io::Error| SearchError::Fixture(format!("{}: {e}", path.display()));
        fs::create_dir_all(&self.dir).map_err(io)?;
        let tmp = path.with_extension("json.tmp");
        let mut body = serde_json::to_string_pretty(hits).expect("hits serialize");
        body.push('\n');
        fs::write(&tmp, body).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchCounts {
    pub searches: usize,
    pub network: usize,
}

pub struct Retriever {
    mode: Mode,
    backend: Option<Arc<dyn SearchBackend>>,
    fixtures: Option<SearchFixtures>,
    retry_delay: Duration,
    searches: AtomicUsize,
    network: AtomicUsize,
}

impl fmt::Debug for Retriever {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Retriever")
            .field("mode", &self.mode)
            .field("backend", &self.backend.as_ref().map(|b| b.name().to_string()))
            .field("fixtures", &self.fixtures)
            .finish()
    }
}

impl Retriever {
    /// `backend` is required for live and record modes, `fixtures` for record
    /// and replay.
    pub fn new(
        mode: Mode,
        backend: Option<Arc<dyn SearchBackend>>,
        fixtures: Option<SearchFixtures>,
    ) -> Self {
        Self {
            mode,
            backend,
            fixtures,
            retry_delay: Duration::from_millis(500),
            searches: AtomicUsize::new(0),
            network: AtomicUsize::new(0),
        }
    }

    pub fn with_retry_delay(mut self, delay: Duration) -> Self {
        self.retry_delay = delay;
        self
    }

    pub fn counts(&self) -> SearchCounts {
        SearchCounts {
            searches: self.searches.load(Ordering::Relaxed),
            network: self.network.load(Ordering::Relaxed),
        }
    }

    pub fn search(&self, query: &SearchQuery, n: usize) -> Result<Vec<SearchHit>, SearchError> {
        self.searches.fetch_add(1, Ordering::Relaxed);
        let text = query.as_str();
        let raw = match self.mode {
            Mode::Replay => self
                .fixtures()?
                .get(text)?
                .ok_or_else(|| SearchError::ReplayMiss(text.to_string()))?,
            Mode::Live => self.call_backend(text, n)?,
            Mode::Record => {
                let hits = self.call_backend(text, n)?;
                self.fixtures()?.put(text, &hits)?;
                hits
            }
        };
        Ok(to_hits(raw, text, n))
    }

    fn fixtures(&self) -> Result<&SearchFixtures, SearchError> {
        self.fixtures
            .as_ref()
            .ok_or_else(|| SearchError::Fixture(format!("{} mode needs a fixture directory", self.mode)))
    }

    fn call_backend(&self, query: &str, n: usize) -> Result<Vec<RawHit>, SearchError> {
        let backend = self
            .backend
            .as_ref()
            .ok_or_else(|| SearchError::NoBackend(format!("{} mode", self.mode)))?;
        let mut attempt = 0u32;
        loop {
            self.network.fetch_add(1, Ordering::Relaxed);
            match backend.search(query, n) {
                Err(e) if e.is_retryable() && attempt < 2 => {
                    log::warn!("search `{query}` failed ({e}); retrying");
                    thread::sleep(self.retry_delay * 2u32.pow(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

fn to_hits(raw: Vec<RawHit>, query: &str, n: usize) -> Vec<SearchHit> {
    raw.into_iter()
        .filter(|h| {
            let ok = is_http_url(&h.url);
            if !ok {
                log::warn!("dropping search hit with non-http(s) url `{}`", h.url);
            }
            ok
        })
        .take(n)
        .enumerate()
        .map(|(i, h)| SearchHit {
            url: h.url,
            title: h.title,
            preview: h.preview,
            source_query: query.to_string(),
            rank: i + 1,
        })
        .collect()
}

pub fn is_http_url(s: &str) -> bool {
    url::Url::parse(s)
        .map(|u| matches!(u.scheme(), "http" | "https") && u.has_host())
        .unwrap_or(false)
}

/// Canonical form for URL identity: lowercase scheme and host (done by the
/// parser), no fragment, no trailing slash.
pub fn normalize_url(raw: &str) -> String {
    let trimmed = raw.trim();
    match url::Url::parse(trimmed) {
        Ok(mut u) => {
            u.set_fragment(None);
            u.to_string().trim_end_matches('/').to_string()
        }
        Err(_) => {
            let no_fragment = trimmed.split('#').next().unwrap_or(trimmed);
            no_fragment.trim_end_matches('/').to_ascii_lowercase()
        }
    }
}

/// Concatenates hit lists in query order, keeping the first hit for each
/// normalized URL.
pub fn merge_dedupe(hit_lists: Vec<Vec<SearchHit>>) -> Vec<SearchHit> {
    let mut seen = HashSet::new();
    hit_lists
        .into_iter()
        .flatten()
        .filter(|h| seen.insert(normalize_url(&h.url)))
        .collect()
}

/// One `N. URL — TITLE — PREVIEW` line per hit, numbered from 1.
pub fn format_search_results(hits: &[SearchHit]) -> String {
    hits.iter()
        .enumerate()
        .map(|(i, h)| {
            format!(
                "{}. {} — {} — {}",
                i + 1,
                h.url,
                one_line(&h.title),
                one_line(&h.preview)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub(crate) fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Keeps the hits whose URLs the model selects, in the model's order.
/// Falls back to all hits when the model output is unusable.
pub fn filter_urls(
    gateway: &Gateway,
    question: &UserQuery,
    hits: &[SearchHit],
    transcript: &mut Vec<TranscriptEntry>,
) -> Result<Vec<SearchHit>, LlmError> {
    if hits.is_empty() {
        return Ok(Vec::new());
    }
    let listing = format_search_results(hits);
    let prompt = render(
        TemplateId::UrlFilter,
        &[("USER_QUESTION", &question.text), ("SEARCH_RESULT", &listing)],
    )
    .expect("url-filter bindings are complete");
    let selected = gateway.complete_json("url-filter", ModelTier::Fast, prompt, transcript, parse_string_array)?;
    match selected {
        Some(urls) => Ok(select_hits(hits, &urls)),
        None => {
            log::warn!("url filter failed for {}; keeping all {} hits", question.id, hits.len());
            Ok(hits.to_vec())
        }
    }
}

/// Subset of `hits` named by `urls`, ordered as in `urls`. Unknown URLs are
/// dropped with a warning; repeated URLs count once.
pub fn select_hits(hits: &[SearchHit], urls: &[String]) -> Vec<SearchHit> {
    let mut taken = HashSet::new();
    let mut out = Vec::new();
    for url in urls {
        let key = normalize_url(url);
        match hits.iter().find(|h| normalize_url(&h.url) == key) {
            Some(hit) => {
                if taken.insert(key) {
                    out.push(hit.clone());
                }
            }
            None => log::warn!("url filter returned unknown url `{url}`; ignoring"),
        }
    }
    out
}
