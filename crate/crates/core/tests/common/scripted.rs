//! A deterministic stand-in model and static search/fetch backends built
//! from the fixture corpus. The model recognises each prompt kind by its
//! opening words and answers with simple keyword-overlap heuristics.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use hifi_rag::ingest::{IngestError, PageBackend, ThreadBackend};
use hifi_rag::llm::{ChatMessage, LlmError, LlmProvider, ModelTier, Role};
use hifi_rag::search::{RawHit, SearchBackend, SearchError};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
pub struct CorpusQuestion {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub plan: Vec<String>,
    pub closed_book: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Corpus {
    pub questions: Vec<CorpusQuestion>,
    pub search: HashMap<String, Vec<RawHit>>,
    pub pages: HashMap<String, PathBuf>,
    pub threads: HashMap<String, PathBuf>,
    #[serde(skip)]
    pub root: PathBuf,
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

pub fn replay_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/replay")
}

impl Corpus {
    pub fn load() -> Corpus {
        let root = corpus_dir();
        let text = fs::read_to_string(root.join("corpus.json")).expect("corpus.json readable");
        let mut corpus: Corpus = serde_json::from_str(&text).expect("corpus.json parses");
        corpus.root = root;
        corpus
    }

    fn question(&self, text: &str) -> Option<&CorpusQuestion> {
        let text = text.trim();
        self.questions.iter().find(|q| q.question == text)
    }
}

const STOPWORDS: &[&str] = &[
    "about", "after", "again", "also", "because", "been", "before", "does", "from", "give", "have", "here", "into",
    "just", "like", "more", "only", "that", "their", "them", "then", "there", "these", "they", "this", "what",
    "when", "where", "which", "while", "will", "with", "would", "your", "how", "the", "and", "for", "you", "should",
    "years", "experience", "explain", "tell", "need", "want", "live", "own",
];

pub fn keywords(text: &str) -> BTreeSet<String> {
    hifi_rag::eval::tokenize(text)
        .into_iter()
        .filter(|t| t.chars().count() >= 4 && !STOPWORDS.contains(&t.as_str()))
        .map(|t| t.trim_end_matches('s').to_string())
        .collect()
}

fn overlap(a: &BTreeSet<String>, text: &str) -> usize {
    keywords(text).intersection(a).count()
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> &'a str {
    let from = text.find(start).map_or(0, |i| i + start.len());
    let rest = &text[from..];
    rest.find(end).map_or(rest, |j| &rest[..j])
}

/// Leading `N. ` number of a list line.
fn line_index(line: &str) -> Option<usize> {
    let (num, rest) = line.split_once(". ")?;
    (!rest.is_empty()).then(|| num.trim().parse().ok()).flatten()
}

pub struct ScriptedModel {
    corpus: Corpus,
}

impl ScriptedModel {
    pub fn new(corpus: Corpus) -> Self {
        Self { corpus }
    }

    fn plan(&self, prompt: &str) -> String {
        let question = between(prompt, "query for this question: \n", "\nReturn a json list");
        let plan = self
            .corpus
            .question(question)
            .map(|q| q.plan.clone())
            .unwrap_or_else(|| vec![question.trim().to_string()]);
        format!("```json\n{}\n```", serde_json::to_string(&plan).unwrap())
    }

    fn url_filter(&self, prompt: &str) -> String {
        let question = between(prompt, "to answer \n\"", "\"?\n");
        let kw = keywords(question);
        let listing = between(prompt, "preview content:\n\n", "\u{0}");
        let urls: Vec<&str> = listing
            .lines()
            .filter_map(|l| {
                let (_, rest) = l.split_once(". ")?;
                let (url, tail) = rest.split_once(" — ")?;
                (overlap(&kw, tail) >= 1).then_some(url)
            })
            .collect();
        format!("Here are the helpful URLs:\n{}", serde_json::to_string(&urls).unwrap())
    }

    fn chunk_filter(&self, prompt: &str) -> String {
        let question = between(prompt, "help answer ", " without having to search");
        let kw = keywords(question);
        let previews = between(prompt, "Section previews in the page: ", "\n------------------\nUseful chunks:");
        let mut scored: Vec<(usize, usize)> = previews
            .lines()
            .filter_map(|l| Some((line_index(l)?, overlap(&kw, l))))
            .filter(|&(_, s)| s > 0)
            .collect();
        scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let picked: Vec<usize> = scored.into_iter().take(3).map(|(i, _)| i).collect();
        serde_json::to_string(&picked).unwrap()
    }

    fn draft(&self, prompt: &str) -> String {
        let question = between(prompt, "User question: ", "\n");
        let closed_book = || {
            self.corpus
                .question(question)
                .map(|q| q.closed_book.clone())
                .unwrap_or_else(|| format!("I do not know enough to answer: {question}"))
        };
        if !prompt.contains("\n-----------\nHere're extra information") {
            return closed_book();
        }
        let web = between(prompt, "you might find helpful:\n", "\n-----------\n");
        let kw = keywords(question);
        let mut sentences: Vec<(usize, usize, String)> = Vec::new();
        for line in web.lines() {
            let line = line.trim().trim_start_matches("- ");
            if line.is_empty() || line.starts_with('[') || line.starts_with("## ") || line.starts_with("http") {
                continue;
            }
            for s in line.split_inclusive(". ") {
                let s = s.trim();
                if s.split_whitespace().count() >= 4 {
                    sentences.push((sentences.len(), overlap(&kw, s), s.to_string()));
                }
            }
        }
        let mut best: Vec<_> = sentences.iter().filter(|s| s.1 > 0).collect();
        best.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        best.truncate(3);
        best.sort_by_key(|s| s.0);
        if best.is_empty() {
            return closed_book();
        }
        best.iter().map(|s| s.2.as_str()).collect::<Vec<_>>().join(" ")
    }

    fn refine(&self, messages: &[ChatMessage]) -> String {
        let previous = messages
            .iter()
            .rev()
            .find(|m| m.role == Role::Model)
            .map_or("", |m| m.text.as_str());
        let words: Vec<&str> = previous.split_whitespace().take(45).collect();
        let mut text = words.join(" ");
        if !text.ends_with(['.', '?', '!']) {
            text.push('.');
        }
        text
    }

    fn citation(&self, prompt: &str) -> String {
        let answer = between(prompt, "ANSWER: ", "\n-----------\nSOURCES:");
        let sources = between(prompt, "\n-----------\nSOURCES:\n", "\u{0}");
        let kw = keywords(answer);
        let mut cited = Vec::new();
        let mut current: Option<(usize, String)> = None;
        let mut flush = |cur: Option<(usize, String)>| {
            if let Some((n, body)) = cur {
                if overlap(&kw, &body) >= 3 {
                    cited.push(n);
                }
            }
        };
        for line in sources.lines() {
            let number = line
                .strip_prefix('[')
                .and_then(|r| r.split_once(']'))
                .and_then(|(n, _)| n.parse::<usize>().ok());
            match number {
                Some(n) => {
                    flush(current.take());
                    current = Some((n, String::new()));
                }
                None => {
                    if let Some((_, body)) = current.as_mut() {
                        body.push_str(line);
                        body.push('\n');
                    }
                }
            }
        }
        flush(current);
        serde_json::to_string(&cited).unwrap()
    }

    fn baseline(&self, prompt: &str) -> String {
        let question = prompt.trim_start_matches("Please limit your answer to under 200 words. ");
        self.corpus
            .question(question)
            .map(|q| q.closed_book.clone())
            .unwrap_or_else(|| format!("I do not know enough to answer: {question}"))
    }
}

impl LlmProvider for ScriptedModel {
    fn complete(&self, _tier: ModelTier, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let prompt = messages.last().map_or("", |m| m.text.as_str());
        Ok(if prompt.starts_with("Create an effective and concise Google search query") {
            self.plan(prompt)
        } else if prompt.starts_with("What URLs from the list below") {
            self.url_filter(prompt)
        } else if prompt.starts_with("Given a webpage preview") {
            self.chunk_filter(prompt)
        } else if prompt.starts_with("You are a helpful and knowledgeable assistant.") {
            self.draft(prompt)
        } else if prompt.starts_with("Revise your answer") {
            self.refine(messages)
        } else if prompt.starts_with("Read the ANSWER") {
            self.citation(prompt)
        } else if prompt.starts_with("Please limit your answer") {
            self.baseline(prompt)
        } else {
            return Err(LlmError::InvalidRequest("unrecognised prompt".into()));
        })
    }

    fn name(&self) -> &str {
        "scripted"
    }
}

pub struct CorpusSearch(pub Corpus);

impl SearchBackend for CorpusSearch {
    fn search(&self, query: &str, _n: usize) -> Result<Vec<RawHit>, SearchError> {
        Ok(self.0.search.get(query).cloned().unwrap_or_default())
    }

    fn name(&self) -> &str {
        "corpus"
    }
}

pub struct CorpusPages(pub Corpus);

impl PageBackend for CorpusPages {
    fn fetch(&self, url: &str) -> Result<String, IngestError> {
        let file = self.0.pages.get(url).ok_or_else(|| IngestError::Http {
            status: 404,
            url: url.to_string(),
        })?;
        fs::read_to_string(self.0.root.join(file)).map_err(|e| IngestError::Transport(e.to_string()))
    }

    fn name(&self) -> &str {
        "corpus"
    }
}

impl ThreadBackend for CorpusPages {
    fn fetch_thread(&self, url: &str) -> Result<String, IngestError> {
        let file = self.0.threads.get(url).ok_or_else(|| IngestError::Http {
            status: 404,
            url: url.to_string(),
        })?;
        fs::read_to_string(self.0.root.join(file)).map_err(|e| IngestError::Transport(e.to_string()))
    }

    fn name(&self) -> &str {
        "corpus"
    }
}
