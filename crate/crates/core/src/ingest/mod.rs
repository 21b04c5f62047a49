//! Page acquisition and hierarchical parsing.
//!
//! Web pages go through a scraping backend and [`html::parse_hierarchical`];
//! Reddit threads go through the Reddit API and
//! [`reddit::reconstruct_reddit_tree`]. Both share one on-disk raw cache.

pub mod cache;
pub mod html;
pub mod reddit;
pub mod scrape;

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mode::Mode;
use crate::model::PipelineConfig;
use crate::search::{is_http_url, normalize_url};

pub use cache::{CacheEntry, CacheLookup, DiskCache};
pub use html::parse_hierarchical;
pub use reddit::{is_reddit_url, reconstruct_reddit_tree, RedditComment, RedditThread};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PageKind {
    Web,
    Reddit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub index: usize,
    pub heading_path: Vec<String>,
    /// 1–4 for `h1`–`h4`, 0 for text ahead of the first heading.
    pub heading_level: u8,
    pub content: String,
    pub snippet: String,
}

impl Section {
    pub fn new(index: usize, heading_path: Vec<String>, heading_level: u8, content: String, snippet_chars: usize) -> Self {
        let snippet = content.chars().take(snippet_chars).collect();
        Self {
            index,
            heading_path,
            heading_level,
            content,
            snippet,
        }
    }

    /// Heading path joined with ` > `, or `Introduction` for a preamble.
    pub fn heading_label(&self) -> String {
        if self.heading_path.is_empty() {
            "Introduction".to_string()
        } else {
            self.heading_path.join(" > ")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageDocument {
    pub url: String,
    pub title: String,
    pub preview: String,
    pub sections: Vec<Section>,
    pub kind: PageKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("not an absolute http(s) url: {0}")]
    InvalidUrl(String),
    #[error("no extractable text in {0}")]
    EmptyDocument(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("reddit thread was deleted")]
    ThreadDeleted,
    #[error("not a reddit thread url: {0}")]
    NotAThread(String),
    #[error("HTTP {status} fetching {url}")]
    Http { status: u16, url: String },
    #[error("timed out fetching {0}")]
    Timeout(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("corrupt cache entry: {0}")]
    CacheCorrupt(String),
    #[error("no cached copy of {0}")]
    ReplayMiss(String),
    #[error("cache write failed: {0}")]
    Io(String),
    #[error("no live fetch backend configured ({0})")]
    NoBackend(String),
}

pub trait PageBackend: Send + Sync {
    /// Returns the raw HTML of `url`.
    fn fetch(&self, url: &str) -> Result<String, IngestError>;

    fn name(&self) -> &str;
}

pub trait ThreadBackend: Send + Sync {
    /// Returns the raw thread listing JSON for `url`.
    fn fetch_thread(&self, url: &str) -> Result<String, IngestError>;

    fn name(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    pub url: String,
    pub body: String,
    pub fetched_at: u64,
    pub from_cache: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FetchCounts {
    pub fetches: usize,
    pub network: usize,
}

pub struct Ingestor {
    mode: Mode,
    pages: Option<Arc<dyn PageBackend>>,
    threads: Option<Arc<dyn ThreadBackend>>,
    cache: DiskCache,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    fetches: AtomicUsize,
    network: AtomicUsize,
}

impl fmt::Debug for Ingestor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ingestor")
            .field("mode", &self.mode)
            .field("pages", &self.pages.as_ref().map(|b| b.name().to_string()))
            .field("threads", &self.threads.as_ref().map(|b| b.name().to_string()))
            .field("cache", &self.cache.dir())
            .finish()
    }
}

enum Source<'a> {
    Page(&'a dyn PageBackend),
    Thread(&'a dyn ThreadBackend),
}

impl Ingestor {
    pub fn new(
        mode: Mode,
        pages: Option<Arc<dyn PageBackend>>,
        threads: Option<Arc<dyn ThreadBackend>>,
        cache: DiskCache,
    ) -> Self {
        Self {
            mode,
            pages,
            threads,
            cache,
            key_locks: Mutex::new(HashMap::new()),
            fetches: AtomicUsize::new(0),
            network: AtomicUsize::new(0),
        }
    }

    pub fn counts(&self) -> FetchCounts {
        FetchCounts {
            fetches: self.fetches.load(Ordering::Relaxed),
            network: self.network.load(Ordering::Relaxed),
        }
    }

    pub fn fetch_page(&self, url: &str) -> Result<Fetched, IngestError> {
        self.fetch_raw(url, false)
    }

    pub fn fetch_reddit_thread(&self, url: &str) -> Result<RedditThread, IngestError> {
        if !is_reddit_url(url) {
            return Err(IngestError::NotAThread(url.to_string()));
        }
        let raw = self.fetch_raw(url, true)?;
        reddit::parse_thread_listing(&raw.body)
    }

    /// Fetches and parses `url`, routing Reddit hosts to the thread path.
    pub fn load_document(&self, url: &str, config: &PipelineConfig) -> Result<PageDocument, IngestError> {
        if is_reddit_url(url) {
            let thread = self.fetch_reddit_thread(url)?;
            Ok(reconstruct_reddit_tree(
                &thread,
                url,
                config.reddit_k,
                config.reddit_m1,
                config.reddit_m2,
                config.snippet_chars,
            ))
        } else {
            let page = self.fetch_page(url)?;
            parse_hierarchical(&page.body, url, config.snippet_chars)
        }
    }

    fn key_lock(&self, url: &str) -> Arc<Mutex<()>> {
        self.key_locks
            .lock()
            .unwrap()
            .entry(normalize_url(url))
            .or_default()
            .clone()
    }

    fn fetch_raw(&self, url: &str, thread: bool) -> Result<Fetched, IngestError> {
        if !is_http_url(url) {
            return Err(IngestError::InvalidUrl(url.to_string()));
        }
        self.fetches.fetch_add(1, Ordering::Relaxed);
        let lock = self.key_lock(url);
        let _guard = lock.lock().unwrap();

        match self.cache.get(url) {
            CacheLookup::Hit(entry) => {
                return Ok(Fetched {
                    url: url.to_string(),
                    body: entry.body,
                    fetched_at: entry.fetched_at,
                    from_cache: true,
                })
            }
            CacheLookup::Corrupt(msg) if self.mode == Mode::Replay => {
                return Err(IngestError::CacheCorrupt(msg))
            }
            CacheLookup::Corrupt(msg) => log::warn!("re-fetching {url}: {msg}"),
            CacheLookup::Miss if self.mode == Mode::Replay => {
                return Err(IngestError::ReplayMiss(url.to_string()))
            }
            CacheLookup::Miss => {}
        }

        let source = if thread {
            self.threads.as_deref().map(Source::Thread)
        } else {
            self.pages.as_deref().map(Source::Page)
        }
        .ok_or_else(|| IngestError::NoBackend(format!("{} mode, {url}", self.mode)))?;

        self.network.fetch_add(1, Ordering::Relaxed);
        let body = match source {
            Source::Page(b) => b.fetch(url)?,
            Source::Thread(b) => b.fetch_thread(url)?,
        };
        let entry = self
            .cache
            .put(url, &body)
            .map_err(|e| IngestError::Io(e.to_string()))?;
        Ok(Fetched {
            url: url.to_string(),
            body: entry.body,
            fetched_at: entry.fetched_at,
            from_cache: false,
        })
    }
}
