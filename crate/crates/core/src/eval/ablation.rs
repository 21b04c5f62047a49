use serde::{Deserialize, Serialize};

use super::{evaluate, render_table, EvalError, EvalReport, Prediction, QAPair};
use crate::model::{named_config, ConfigError, UserQuery};
use crate::pipeline::{InteractionCounts, Pipeline};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub report: EvalReport,
    pub interactions: InteractionCounts,
    pub failures: Vec<SampleFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    pub table: String,
}

#[derive(Debug, thiserror::Error)]
pub enum AblationError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Runs each named config over the first `sample_limit` pairs, one config at
/// a time. Failed questions score 0 and are listed per row.
pub fn run_ablation(
    pipeline: &Pipeline,
    dataset: &[QAPair],
    config_names: &[String],
    sample_limit: Option<usize>,
    workers: usize,
) -> Result<AblationReport, AblationError> {
    let configs = config_names
        .iter()
        .map(|n| named_config(n).map(|c| (n.as_str(), c)))
        .collect::<Result<Vec<_>, _>>()?;
    let samples = &dataset[..sample_limit.unwrap_or(dataset.len()).min(dataset.len())];
    let questions = samples
        .iter()
        .map(|p| UserQuery::new(p.id.clone(), p.question.clone()))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::with_capacity(configs.len());
    for (name, config) in configs {
        let before = pipeline.interactions();
        let outcomes = pipeline.run_batch(&questions, &config, name, workers);
        let interactions = pipeline.interactions().since(before);
        let mut failures = Vec::new();
        let predictions: Vec<Prediction> = questions
            .iter()
            .zip(outcomes)
            .map(|(q, out)| match out {
                Ok((answer, _)) => Prediction {
                    id: q.id.clone(),
                    answer: answer.text,
                    citations: Some(answer.citations.into_iter().map(|c| c.url).collect()),
                    error: None,
                },
                Err(e) => {
                    failures.push(SampleFailure {
                        id: q.id.clone(),
                        error: e.to_string(),
                    });
                    Prediction {
                        id: q.id.clone(),
                        answer: String::new(),
                        citations: None,
                        error: Some(e.to_string()),
                    }
                }
            })
            .collect();
        let report = evaluate(name, &predictions, samples, None)?;
        log::info!(
            "{name}: rouge-l {:.4} over {} samples ({} failed)",
            report.mean_rouge_l,
            report.sample_count,
            failures.len()
        );
        rows.push(AblationRow {
            report,
            interactions,
            failures,
        });
    }
    let table = render_table(&rows.iter().map(|r| r.report.clone()).collect::<Vec<_>>());
    Ok(AblationReport { rows, table })
}
