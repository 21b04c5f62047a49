//! Command-line front end. Exit status: 0 success, 1 input error, 2 runtime
//! failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::eval::{self, load_external_scores, load_jsonl, load_predictions, load_questions, render_table_with, Prediction};
use crate::mode::Mode;
use crate::model::{named_config, PipelineConfig, UserQuery, PRESET_NAMES};
use crate::pipeline::{trace_path, Paths, Pipeline};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hifi-rag", version, about = "Retrieval-augmented QA with hierarchical filtering")]
pub struct Cli {
    /// live, record or replay (default: HIFI_MODE, else live)
    #[arg(long, global = true)]
    pub mode: Option<Mode>,
    /// Fixture root with llm/ and search/ (default: HIFI_FIXTURE_DIR, else ./fixtures)
    #[arg(long, global = true)]
    pub fixture_dir: Option<PathBuf>,
    /// Raw page cache (default: HIFI_CACHE_DIR, else ./.hifi-cache)
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Trace output (default: HIFI_TRACE_DIR, else ./traces)
    #[arg(long, global = true)]
    pub trace_dir: Option<PathBuf>,
    /// Questions in flight at once for batch and ablate
    #[arg(long, global = true, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Answer one question
    Ask {
        question: String,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        output: OutputFormat,
        #[arg(long, default_value = "ask")]
        id: String,
    },
    /// Answer every question in a JSONL file
    Batch {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score predictions against references
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        references: PathBuf,
        #[arg(long)]
        external_scores: Option<PathBuf>,
        #[arg(long, default_value = eval::DEFAULT_EXTERNAL_LABEL)]
        external_label: String,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run and score several presets over a dataset
    Ablate {
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated preset names (default: all seven)
        #[arg(long, value_delimiter = ',')]
        configs: Vec<String>,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Preset name
    #[arg(long, default_value = "final", conflicts_with = "config_file")]
    pub config: String,
    /// JSON file with PipelineConfig fields
    #[arg(long)]
    pub config_file: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<(String, PipelineConfig), String> {
        let (name, config) = match &self.config_file {
            Some(path) => (
                path.file_stem().map_or("custom".into(), |s| s.to_string_lossy().into_owned()),
                PipelineConfig::from_json_file(path).map_err(|e| e.to_string())?,
            ),
            None => (self.config.clone(), named_config(&self.config).map_err(|e| e.to_string())?),
        };
        let config = config.validate().map_err(|e| format!("invalid config `{name}`: {e}"))?;
        Ok((name, config))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

enum Failure {
    Input(String),
    Runtime(String),
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn paths(cli: &Cli) -> Paths {
    let mut paths = Paths::from_env();
    if let Some(d) = &cli.fixture_dir {
        paths.fixture_dir = d.clone();
    }
    if let Some(d) = &cli.cache_dir {
        paths.cache_dir = d.clone();
    }
    if let Some(d) = &cli.trace_dir {
        paths.trace_dir = Some(d.clone());
    }
    paths
}

fn pipeline(cli: &Cli) -> Result<(Pipeline, Paths), Failure> {
    let mode = match cli.mode {
        Some(m) => m,
        None => Mode::from_env().map_err(Failure::Input)?,
    };
    let paths = paths(cli);
    let pipeline = Pipeline::from_env(mode, &paths).map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok((pipeline, paths))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let mut body = serde_json::to_string_pretty(value).expect("report serializes");
    body.push('\n');
    std::fs::write(path, body).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn summary(pipeline: &Pipeline) -> String {
    let c = pipeline.interactions();
    format!(
        "interactions: fast={} deep={} searches={} fetches={} network={}",
        c.fast_calls, c.deep_calls, c.searches, c.fetches, c.network_calls
    )
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let io = |e: std::io::Error| Failure::Runtime(e.to_string());
    let workers = cli.workers as usize;
    match &cli.command {
        Command::Ask {
            question,
            config,
            output,
            id,
        } => {
            let (name, config) = config.resolve().map_err(Failure::Input)?;
            let question = UserQuery::new(id.clone(), question.clone()).map_err(|e| Failure::Input(e.to_string()))?;
            let (pipeline, paths) = pipeline(&cli)?;
            let (answer, trace) = pipeline
                .run(&question, &config, &name)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            let trace_file = paths.trace_dir.as_deref().map(|d| trace_path(d, &trace));
            match output {
                OutputFormat::Json => {
                    let obj = json!({
                        "id": answer.query_id,
                        "answer": answer.text,
                        "citations": answer.citations,
                        "trace_path": trace_file,
                    });
                    writeln!(out, "{}", serde_json::to_string(&obj).expect("json")).map_err(io)?;
                }
                OutputFormat::Text => {
                    writeln!(out, "{}", answer.text).map_err(io)?;
                    if !answer.citations.is_empty() {
                        writeln!(out, "\nSources:").map_err(io)?;
                        for c in &answer.citations {
                            writeln!(out, "[{}] {}", c.source_index, c.url).map_err(io)?;
                        }
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Batch { input, output, config } => {
            let (name, config) = config.resolve().map_err(Failure::Input)?;
            let questions = load_questions(input)
                .map_err(|e| Failure::Input(e.to_string()))?
                .into_iter()
                .map(|(id, text)| UserQuery::new(id, text).map_err(|e| Failure::Input(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            let (pipeline, _) = pipeline(&cli)?;
            let outcomes = pipeline.run_batch(&questions, &config, &name, workers);
            let mut failed = 0;
            let predictions: Vec<Prediction> = questions
                .iter()
                .zip(outcomes)
                .map(|(q, o)| match o {
                    Ok((a, _)) => Prediction {
                        id: q.id.clone(),
                        answer: a.text,
                        citations: Some(a.citations.into_iter().map(|c| c.url).collect()),
                        error: None,
                    },
                    Err(e) => {
                        failed += 1;
                        Prediction {
                            id: q.id.clone(),
                            answer: String::new(),
                            citations: None,
                            error: Some(e.to_string()),
                        }
                    }
                })
                .collect();
            eval::write_jsonl(output, &predictions).map_err(io)?;
            writeln!(err, "{}", summary(&pipeline)).map_err(io)?;
            if failed > 0 {
                writeln!(err, "{failed} of {} questions failed", predictions.len()).map_err(io)?;
                return Ok(EXIT_RUNTIME);
            }
            Ok(EXIT_OK)
        }
        Command::Eval {
            predictions,
            references,
            external_scores,
            external_label,
            report,
        } => {
            let input = |e: eval::EvalError| Failure::Input(e.to_string());
            let preds = load_predictions(predictions).map_err(input)?;
            let refs = load_jsonl(references).map_err(input)?;
            let ext = external_scores.as_deref().map(load_external_scores).transpose().map_err(input)?;
            let name = predictions.file_stem().map_or("predictions".into(), |s| s.to_string_lossy().into_owned());
            let result = eval::evaluate(&name, &preds, &refs, ext.as_deref()).map_err(input)?;
            write!(out, "{}", render_table_with(std::slice::from_ref(&result), external_label)).map_err(io)?;
            if let Some(path) = report {
                write_json(path, &result)?;
            }
            Ok(EXIT_OK)
        }
        Command::Ablate {
            dataset,
            configs,
            limit,
            report,
        } => {
            let data = load_jsonl(dataset).map_err(|e| Failure::Input(e.to_string()))?;
            let names: Vec<String> = if configs.is_empty() {
                PRESET_NAMES.iter().map(|s| s.to_string()).collect()
            } else {
                configs.clone()
            };
            for n in &names {
                named_config(n).map_err(|e| Failure::Input(e.to_string()))?;
            }
            let (pipeline, _) = pipeline(&cli)?;
            let result = eval::run_ablation(&pipeline, &data, &names, *limit, workers)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            write!(out, "{}", result.table).map_err(io)?;
            for row in &result.rows {
                let c = row.interactions;
                writeln!(
                    err,
                    "{}: fast={} deep={} searches={} fetches={} failed={}",
                    row.report.config_name,
                    c.fast_calls,
                    c.deep_calls,
                    c.searches,
                    c.fetches,
                    row.failures.len()
                )
                .map_err(io)?;
            }
            if let Some(path) = report {
                write_json(path, &result)?;
            }
            Ok(EXIT_OK)
        }
    }
}
