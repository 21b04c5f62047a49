//! Stage wiring, batch execution and trace output.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cite::{verify_citations, Citation};
use crate::exec::bounded_map;
use crate::filter::{apply_filter, drop_empty_sites, pass_through, rank_sections, SiteContext};
use crate::generate::{assemble_web_content, generate_answer, generate_baseline, load_examples, GenerateError};
use crate::ingest::{
    reddit::RedditClient, scrape::ScrapingdogBackend, DiskCache, IngestError, Ingestor, PageBackend, PageDocument,
    ThreadBackend,
};
use crate::llm::gemini::{GeminiConfig, GeminiProvider};
use crate::llm::{FixtureStore, Gateway, LlmError, LlmProvider};
use crate::mode::Mode;
use crate::model::{BaselineMode, ConfigError, PipelineConfig, RunTrace, TranscriptEntry, UserQuery};
use crate::planner::{plan_queries, raw_query, SearchQuery};
use crate::search::{filter_urls, merge_dedupe, serper::SerperBackend, Retriever, SearchBackend, SearchError, SearchFixtures, SearchHit};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalAnswer {
    pub query_id: String,
    pub text: String,
    pub citations: Vec<Citation>,
    pub config_name: String,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("question exceeded its {limit:?} budget during {stage}")]
    Timeout { stage: &'static str, limit: Duration },
    #[error("writing trace: {0}")]
    Trace(String),
    #[error("{0}")]
    Setup(String),
}

/// Summed interaction counters across the gateway, retriever and ingestor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InteractionCounts {
    pub fast_calls: usize,
    pub deep_calls: usize,
    pub searches: usize,
    pub fetches: usize,
    pub network_calls: usize,
}

impl InteractionCounts {
    pub fn since(self, earlier: InteractionCounts) -> InteractionCounts {
        InteractionCounts {
            fast_calls: self.fast_calls - earlier.fast_calls,
            deep_calls: self.deep_calls - earlier.deep_calls,
            searches: self.searches - earlier.searches,
            fetches: self.fetches - earlier.fetches,
            network_calls: self.network_calls - earlier.network_calls,
        }
    }
}

/// Where fixtures, cached pages and traces live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paths {
    /// Holds `llm/` and `search/` fixture subdirectories.
    pub fixture_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub trace_dir: Option<PathBuf>,
}

impl Paths {
    pub fn from_env() -> Self {
        let var = |k: &str, d: &str| PathBuf::from(std::env::var(k).unwrap_or_else(|_| d.to_string()));
        Paths {
            fixture_dir: var("HIFI_FIXTURE_DIR", "fixtures"),
            cache_dir: var("HIFI_CACHE_DIR", ".hifi-cache"),
            trace_dir: Some(var("HIFI_TRACE_DIR", "traces")),
        }
    }
}

pub struct Pipeline {
    gateway: Gateway,
    retriever: Retriever,
    ingestor: Ingestor,
    trace_dir: Option<PathBuf>,
}

type Outcome = Result<(FinalAnswer, RunTrace), PipelineError>;

impl Pipeline {
    pub fn new(gateway: Gateway, retriever: Retriever, ingestor: Ingestor) -> Self {
        Self {
            gateway,
            retriever,
            ingestor,
            trace_dir: None,
        }
    }

    pub fn with_trace_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.trace_dir = Some(dir.into());
        self
    }

    /// Replays strictly from recorded fixtures and cached pages.
    pub fn replay(paths: &Paths) -> Self {
        Self::build(Mode::Replay, paths, None, None, None, None)
    }

    /// Live or record mode with backends configured from the environment.
    /// Only the model credentials are required up front; missing search or
    /// fetch credentials surface when those stages run.
    pub fn from_env(mode: Mode, paths: &Paths) -> Result<Self, PipelineError> {
        if mode == Mode::Replay {
            return Ok(Self::replay(paths));
        }
        let llm: Arc<dyn LlmProvider> = Arc::new(GeminiProvider::new(GeminiConfig::from_env()?));
        let search = SerperBackend::from_env()
            .map(|b| Arc::new(b) as Arc<dyn SearchBackend>)
            .map_err(|e| log::warn!("{e}"))
            .ok();
        let pages = ScrapingdogBackend::from_env().map(|b| Arc::new(b) as Arc<dyn PageBackend>);
        let threads = RedditClient::from_env(Duration::from_secs(20)).map(|b| Arc::new(b) as Arc<dyn ThreadBackend>);
        if pages.is_none() {
            log::warn!("HIFI_SCRAPE_API_KEY is unset; web pages will be skipped");
        }
        if threads.is_none() {
            log::warn!("reddit credentials are unset; reddit threads will be skipped");
        }
        Ok(Self::build(mode, paths, Some(llm), search, pages, threads))
    }

    fn build(
        mode: Mode,
        paths: &Paths,
        llm: Option<Arc<dyn LlmProvider>>,
        search: Option<Arc<dyn SearchBackend>>,
        pages: Option<Arc<dyn PageBackend>>,
        threads: Option<Arc<dyn ThreadBackend>>,
    ) -> Self {
        let store = || FixtureStore::new(paths.fixture_dir.join("llm"));
        let gateway = match (mode, llm) {
            (Mode::Live, Some(p)) => Gateway::live(p),
            (Mode::Record, Some(p)) => Gateway::record(p, store()),
            _ => Gateway::replay(store()),
        };
        let fixtures = (mode != Mode::Live).then(|| SearchFixtures::new(paths.fixture_dir.join("search")));
        let retriever = Retriever::new(mode, search, fixtures);
        let ingestor = Ingestor::new(mode, pages, threads, DiskCache::new(&paths.cache_dir));
        Self {
            gateway,
            retriever,
            ingestor,
            trace_dir: paths.trace_dir.clone(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.gateway.mode()
    }

    pub fn interactions(&self) -> InteractionCounts {
        let llm = self.gateway.counts();
        let search = self.retriever.counts();
        let fetch = self.ingestor.counts();
        InteractionCounts {
            fast_calls: llm.fast,
            deep_calls: llm.deep,
            searches: search.searches,
            fetches: fetch.fetches,
            network_calls: llm.network + search.network + fetch.network,
        }
    }

    /// Runs one question and writes its trace when a trace directory is set.
    pub fn run(&self, question: &UserQuery, config: &PipelineConfig, config_name: &str) -> Outcome {
        let (answer, trace) = self.run_pipeline(question, config, config_name)?;
        if let Some(dir) = &self.trace_dir {
            write_trace(dir, &trace)?;
        }
        Ok((answer, trace))
    }

    /// Runs questions concurrently with at most `workers` in flight. Results
    /// are in input order.
    pub fn run_batch(
        &self,
        questions: &[UserQuery],
        config: &PipelineConfig,
        config_name: &str,
        workers: usize,
    ) -> Vec<Outcome> {
        bounded_map(questions, workers, |q| {
            let out = self.run(q, config, config_name);
            if let Err(e) = &out {
                log::error!("question {} failed: {e}", q.id);
            }
            out
        })
    }

    pub fn run_pipeline(&self, question: &UserQuery, config: &PipelineConfig, config_name: &str) -> Outcome {
        let config = config.clone().validate()?;
        let started = Instant::now();
        let limit = config.question_timeout();
        let check = |stage: &'static str| {
            if started.elapsed() > limit {
                Err(PipelineError::Timeout { stage, limit })
            } else {
                Ok(())
            }
        };
        let mut trace = RunTrace::new(&question.id, config_name);

        let (text, citations) = if config.baseline_mode != BaselineMode::None {
            let draft = generate_baseline(&self.gateway, question, config.baseline_mode, &mut trace.transcript)?;
            (draft.text, Vec::new())
        } else if !config.search_enabled {
            let examples = self.examples_for(&config)?;
            let draft = generate_answer(&self.gateway, question, None, examples.as_deref(), &mut trace.transcript)?;
            (draft.text, Vec::new())
        } else {
            let queries = if config.rephrase_enabled {
                plan_queries(&self.gateway, question, config.max_queries, &mut trace.transcript)?
            } else {
                raw_query(question)
            };
            trace.planned_queries = queries.iter().map(|q| q.as_str().to_string()).collect();
            check("query planning")?;

            let hits = self.search_all(&queries, &config)?;
            trace.urls_before_filter = hits.len();
            let hits = if config.url_filter_enabled {
                filter_urls(&self.gateway, question, &hits, &mut trace.transcript)?
            } else {
                hits
            };
            trace.urls_after_filter = hits.len();
            check("retrieval")?;

            let pages = self.fetch_all(&hits, &config)?;
            trace.sections_before_filter = pages.iter().map(|p| p.sections.len()).sum();
            check("fetching")?;

            let sites = if config.chunk_filter_enabled {
                self.filter_sections(question, &pages, &config, &mut trace.transcript)?
            } else {
                pages.iter().map(pass_through).collect()
            };
            trace.sections_after_filter = sites.iter().map(|s| s.kept_sections.len()).sum();
            check("section filtering")?;

            let examples = self.examples_for(&config)?;
            let web = assemble_web_content(&sites);
            if web.sources.is_empty() {
                log::warn!("no usable sources for {}; answering without web content", question.id);
                let draft = generate_answer(&self.gateway, question, None, examples.as_deref(), &mut trace.transcript)?;
                (draft.text, Vec::new())
            } else {
                let draft =
                    generate_answer(&self.gateway, question, Some(&web), examples.as_deref(), &mut trace.transcript)?;
                check("generation")?;
                let citations = verify_citations(&self.gateway, &draft.text, &web, &mut trace.transcript)?;
                (draft.text, citations)
            }
        };

        trace.answer = text.clone();
        trace.citations = citations.iter().map(|c| c.url.clone()).collect();
        trace.wall_time = started.elapsed();
        let answer = FinalAnswer {
            query_id: question.id.clone(),
            text,
            citations,
            config_name: config_name.to_string(),
        };
        Ok((answer, trace))
    }

    fn examples_for(&self, config: &PipelineConfig) -> Result<Option<Vec<crate::generate::FewShotExample>>, PipelineError> {
        if !config.two_turn_enabled {
            return Ok(None);
        }
        Ok(Some(load_examples(config.examples_path.as_deref())?))
    }

    fn search_all(&self, queries: &[SearchQuery], config: &PipelineConfig) -> Result<Vec<SearchHit>, PipelineError> {
        let lists = bounded_map(queries, queries.len(), |q| self.retriever.search(q, config.results_per_query));
        let mut kept = Vec::with_capacity(lists.len());
        for (q, list) in queries.iter().zip(lists) {
            match list {
                Ok(hits) => kept.push(hits),
                Err(e @ (SearchError::Transport(_) | SearchError::Http { .. } | SearchError::ReplayMiss(_))) => {
                    log::warn!("search `{}` failed: {e}", q.as_str());
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(merge_dedupe(kept))
    }

    fn fetch_all(&self, hits: &[SearchHit], config: &PipelineConfig) -> Result<Vec<PageDocument>, PipelineError> {
        let docs = bounded_map(hits, config.fetch_parallelism, |hit| {
            self.ingestor.load_document(&hit.url, config)
        });
        let mut pages = Vec::new();
        for (hit, doc) in hits.iter().zip(docs) {
            match doc {
                Ok(mut page) if !page.sections.is_empty() => {
                    if !hit.preview.trim().is_empty() {
                        page.preview = hit.preview.clone();
                    }
                    pages.push(page);
                }
                Ok(_) => log::warn!("skipping {}: no sections", hit.url),
                Err(e @ IngestError::CacheCorrupt(_)) => return Err(e.into()),
                Err(e) => log::warn!("skipping {}: {e}", hit.url),
            }
        }
        Ok(pages)
    }

    fn filter_sections(
        &self,
        question: &UserQuery,
        pages: &[PageDocument],
        config: &PipelineConfig,
        transcript: &mut Vec<TranscriptEntry>,
    ) -> Result<Vec<SiteContext>, PipelineError> {
        let ranked = bounded_map(pages, config.fetch_parallelism, |page| {
            let mut log = Vec::new();
            rank_sections(&self.gateway, question, page, &mut log).map(|idx| (apply_filter(page, &idx), log))
        });
        let mut sites = Vec::with_capacity(pages.len());
        for r in ranked {
            let (site, log) = r?;
            transcript.extend(log);
            sites.push(site);
        }
        Ok(drop_empty_sites(pages, sites))
    }
}

/// File name safe on common filesystems.
fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}

pub fn trace_path(dir: &Path, trace: &RunTrace) -> PathBuf {
    dir.join(sanitize(&trace.config_name)).join(format!("{}.json", sanitize(&trace.query_id)))
}

pub fn write_trace(dir: &Path, trace: &RunTrace) -> Result<PathBuf, PipelineError> {
    let path = trace_path(dir, trace);
    let err = |e: std::io::Error| PipelineError::Trace(format!("{}: {e}", path.display()));
    fs::create_dir_all(path.parent().expect("trace path has a parent")).map_err(err)?;
    let mut body = serde_json::to_string_pretty(trace).expect("trace serializes");
    body.push('\n');
    fs::write(&path, body).map_err(err)?;
    Ok(path)
}
