//! Regenerates the bundled replay fixtures under `tests/fixtures/replay`
//! by running every preset in record mode against the fixture corpus and
//! the scripted model.
//!
//!     cargo run --example record_fixtures

#[path = "../tests/common/scripted.rs"]
mod scripted;

use std::fs;
use std::sync::Arc;

use hifi_rag::eval::{write_jsonl, QAPair};
use hifi_rag::ingest::{DiskCache, Ingestor};
use hifi_rag::llm::{FixtureStore, Gateway};
use hifi_rag::search::{Retriever, SearchFixtures};
use hifi_rag::{named_config, Mode, Pipeline, UserQuery, PRESET_NAMES};
use scripted::{replay_dir, Corpus, CorpusPages, CorpusSearch, ScriptedModel};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let corpus = Corpus::load();
    let out = replay_dir();
    if out.exists() {
        fs::remove_dir_all(&out).expect("clear old fixtures");
    }

    let pages = Arc::new(CorpusPages(corpus.clone()));
    let pipeline = Pipeline::new(
        Gateway::record(Arc::new(ScriptedModel::new(corpus.clone())), FixtureStore::new(out.join("llm"))),
        Retriever::new(
            Mode::Record,
            Some(Arc::new(CorpusSearch(corpus.clone()))),
            Some(SearchFixtures::new(out.join("search"))),
        ),
        Ingestor::new(Mode::Record, Some(pages.clone()), Some(pages), DiskCache::new(out.join("pages"))),
    );

    let questions: Vec<UserQuery> = corpus
        .questions
        .iter()
        .map(|q| UserQuery::new(q.id.clone(), q.question.clone()).unwrap())
        .collect();
    for name in PRESET_NAMES {
        let config = named_config(name).unwrap();
        for (q, outcome) in questions.iter().zip(pipeline.run_batch(&questions, &config, name, 1)) {
            let (answer, _) = outcome.unwrap_or_else(|e| panic!("{name}/{}: {e}", q.id));
            log::info!("{name}/{}: {}", q.id, answer.text);
        }
    }

    let dataset: Vec<QAPair> = corpus
        .questions
        .iter()
        .map(|q| QAPair {
            id: q.id.clone(),
            question: q.question.clone(),
            answer: q.answer.clone(),
        })
        .collect();
    write_jsonl(&out.join("dataset.jsonl"), &dataset).unwrap();
    println!("{:?}", pipeline.interactions());
}
