//! Raw fetch cache: one `<sha256(normalized url)>.json` file per URL holding
//! `{url, fetched_at, body}`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::search::normalize_url;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub url: String,
    /// Unix seconds.
    pub fetched_at: u64,
    pub body: String,
}

#[derive(Debug, PartialEq, Eq)]
pub enum CacheLookup {
    Hit(CacheEntry),
    Miss,
    Corrupt(String),
}

#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub const ENV: &'static str = "HIFI_CACHE_DIR";
    pub const DEFAULT_DIR: &'static str = ".hifi-cache";

    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn from_env() -> Self {
        Self::new(
            std::env::var(Self::ENV)
                .ok()
                .filter(|d| !d.is_empty())
                .unwrap_or_else(|| Self::DEFAULT_DIR.to_string()),
        )
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(url: &str) -> String {
        hex::encode(Sha256::digest(normalize_url(url).as_bytes()))
    }

    pub fn path_for(&self, url: &str) -> PathBuf {
        self.dir.join(format!("{}.json", Self::key(url)))
    }

    pub fn get(&self, url: &str) -> CacheLookup {
        let path = self.path_for(url);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return CacheLookup::Miss,
            Err(e) => return CacheLookup::Corrupt(format!("{}: {e}", path.display())),
        };
        match serde_json::from_str::<CacheEntry>(&text) {
            Ok(entry) if normalize_url(&entry.url) == normalize_url(url) => CacheLookup::Hit(entry),
            Ok(entry) => CacheLookup::Corrupt(format!(
                "{}: entry is for {} not {url}",
                path.display(),
                entry.url
            )),
            Err(e) => CacheLookup::Corrupt(format!("{}: {e}", path.display())),
        }
    }

    pub fn put(&self, url: &str, body: &str) -> std::io::Result<CacheEntry> {
        fs::create_dir_all(&self.dir)?;
        let entry = CacheEntry {
            url: url.to_string(),
            fetched_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            body: body.to_string(),
        };
        let path = self.path_for(url);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, serde_json::to_string(&entry).expect("entry serializes"))?;
        fs::rename(&tmp, &path)?;
        Ok(entry)
    }
}
