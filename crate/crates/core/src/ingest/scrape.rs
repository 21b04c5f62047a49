//! Live web-page backend for the Scrapingdog scraping API.

use std::time::Duration;

use super::{IngestError, PageBackend};

pub const DEFAULT_ENDPOINT: &str = "https://api.scrapingdog.com/scrape";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(20);

pub struct ScrapingdogBackend {
    api_key: String,
    endpoint: String,
    agent: ureq::Agent,
}

impl ScrapingdogBackend {
    pub fn new(api_key: String, endpoint: String, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            api_key,
            endpoint,
            agent,
        }
    }

    /// Reads `HIFI_SCRAPE_API_KEY` and optional `HIFI_SCRAPE_ENDPOINT`.
    pub fn from_env() -> Option<Self> {
        let key = std::env::var("HIFI_SCRAPE_API_KEY").ok().filter(|k| !k.is_empty())?;
        let endpoint = std::env::var("HIFI_SCRAPE_ENDPOINT")
            .ok()
            .filter(|e| !e.is_empty())
            .unwrap_or_else(|| DEFAULT_ENDPOINT.to_string());
        Some(Self::new(key, endpoint, DEFAULT_TIMEOUT))
    }
}

impl PageBackend for ScrapingdogBackend {
    fn fetch(&self, url: &str) -> Result<String, IngestError> {
        let mut resp = self
            .agent
            .get(&self.endpoint)
            .query("api_key", &self.api_key)
            .query("url", url)
            .query("dynamic", "false")
            .call()
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => IngestError::Timeout(url.to_string()),
                other => IngestError::Transport(other.to_string()),
            })?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(IngestError::Http {
                status,
                url: url.to_string(),
            });
        }
        resp.body_mut()
            .with_config()
            .limit(16 * 1024 * 1024)
            .read_to_string()
            .map_err(|e| IngestError::Transport(e.to_string()))
    }

    fn name(&self) -> &str {
        "scrapingdog"
    }
}
