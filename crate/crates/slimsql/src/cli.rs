//! The `slimsql` command-line tool.
//!
//! Exit codes: 0 on success, 1 for configuration, dataset or trace errors,
//! 2 when a model backend failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use slimsql_core::{ComponentToggles, PromptSet};
use thiserror::Error;

use crate::catalog::{CatalogError, DatabaseRoot};
use crate::config::{ConfigError, RunConfig};
use crate::dataset::{load_dataset, DatasetError, DatasetExample};
use crate::evaluation::{self, render_summary, render_sweep_table, EvalError, SweepAxis};
use crate::pipeline::{render_preview, Pipeline, PipelineError, QuestionTask};
use crate::templates::{load_prompt_set, TemplateError};
use crate::trace::{write_atomically, TraceError, TraceStore};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_BACKEND: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "slimsql", version, about = "Text-to-SQL with small language models")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Answer one question against one database.
    Ask {
        #[arg(long)]
        config: PathBuf,
        /// Database id under the configured database root.
        #[arg(long)]
        db: String,
        /// Optional hint (evidence) for the question.
        #[arg(long)]
        hint: Option<String>,
        question: String,
    },
    /// Run the configured dataset and write traces plus a report.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        toggles: ToggleFlags,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Run a sweep: component ablations, candidate counts or selection rounds.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: AxisArg,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Recompute the report of a finished run from its traces.
    Report {
        /// Trace directory written by `bench`.
        #[arg(long)]
        traces: PathBuf,
        /// Print the JSON report instead of the summary tables.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, Default, Args)]
pub struct ToggleFlags {
    #[arg(long)]
    pub no_pruning: bool,
    #[arg(long)]
    pub no_linking: bool,
    #[arg(long)]
    pub no_multi_candidate: bool,
    #[arg(long)]
    pub no_correction: bool,
    #[arg(long)]
    pub no_selection: bool,
}

impl ToggleFlags {
    pub fn apply(&self, toggles: &mut ComponentToggles) {
        toggles.pruning &= !self.no_pruning;
        toggles.linking &= !self.no_linking;
        toggles.multi_candidate &= !self.no_multi_candidate;
        toggles.correction &= !self.no_correction;
        toggles.selection &= !self.no_selection;
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    /// Override the configured worker count.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Override the configured output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Components,
    Candidates,
    Rounds,
}

impl From<AxisArg> for SweepAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Components => SweepAxis::Components,
            AxisArg::Candidates => SweepAxis::Candidates,
            AxisArg::Rounds => SweepAxis::Rounds,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Templates(#[from] TemplateError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Eval(EvalError),
    #[error(transparent)]
    Pipeline(PipelineError),
    #[error("{0} question(s) failed because a model backend was unavailable; rerun to retry them")]
    BackendFailures(usize),
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::InvalidConfig(message) => CliError::Config(ConfigError::Invalid {
                path: PathBuf::from("<pipeline>"),
                message,
            }),
            other => CliError::Pipeline(other),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Pipeline(p) => p.into(),
            other => CliError::Eval(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Pipeline(e) if e.is_backend() => EXIT_BACKEND,
            CliError::Config(ConfigError::Backend(_)) => EXIT_CONFIG,
            CliError::BackendFailures(_) => EXIT_BACKEND,
            _ => EXIT_CONFIG,
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    // a host process may already have installed a logger
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Ask {
            config,
            db,
            hint,
            question,
        } => ask(&RunConfig::load(&config)?, &db, hint, &question, out),
        Command::Bench { config, toggles, run } => {
            let mut cfg = RunConfig::load(&config)?;
            toggles.apply(&mut cfg.pipeline.toggles);
            apply_run_flags(&mut cfg, &run);
            bench(&cfg, out, err)
        }
        Command::Ablate { config, axis, run } => {
            let mut cfg = RunConfig::load(&config)?;
            apply_run_flags(&mut cfg, &run);
            ablate(&cfg, axis.into(), out, err)
        }
        Command::Report { traces, json } => {
            let store = TraceStore::open(traces)?;
            let report = evaluation::report_from_store(&store)?;
            let text = if json {
                report.to_json()
            } else {
                render_summary(&report)
            };
            let _ = out.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn apply_run_flags(cfg: &mut RunConfig, run: &RunFlags) {
    if let Some(w) = run.workers {
        cfg.workers = w.max(1);
    }
    if let Some(o) = &run.output {
        cfg.output_dir = o.clone();
    }
}

fn prompts(cfg: &RunConfig) -> Result<PromptSet, CliError> {
    Ok(match &cfg.templates_dir {
        Some(dir) => load_prompt_set(dir)?,
        None => PromptSet::builtin(),
    })
}

fn pipeline(cfg: &RunConfig) -> Result<Pipeline, CliError> {
    let router = cfg.backends.build_router()?;
    Ok(Pipeline::new(router, cfg.pipeline.clone())?.with_prompts(prompts(cfg)?))
}

fn ask(
    cfg: &RunConfig,
    db_id: &str,
    hint: Option<String>,
    question: &str,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let pipeline = pipeline(cfg)?;
    let db = DatabaseRoot::new(&cfg.database_root).load(db_id)?;
    let millis = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let task = QuestionTask {
        question_id: format!("ask-{millis}"),
        db_id: db_id.to_string(),
        question: question.to_string(),
        hint: hint.filter(|h| !h.trim().is_empty()),
    };
    let result = pipeline.run(&task, &db)?;

    match &result.selected {
        Some(selected) => {
            let _ = writeln!(out, "{}", selected.sql);
            let rows = cfg.pipeline.result_preview_rows;
            let preview = render_preview(selected, usize::MAX, usize::MAX).unwrap_or_default();
            let _ = writeln!(out);
            for line in preview.lines().take(rows + 1) {
                let _ = writeln!(out, "{line}");
            }
            if selected.outcome.rows.len() > rows {
                let _ = writeln!(out, "... ({} rows)", selected.outcome.rows.len());
            }
        }
        None => {
            let _ = writeln!(out, "no executable candidate");
        }
    }

    let example = DatasetExample {
        question_id: task.question_id.clone(),
        db_id: task.db_id.clone(),
        question: task.question.clone(),
        hint: task.hint.clone(),
        gold_sql: String::new(),
        difficulty: None,
    };
    let store = TraceStore::create(cfg.output_dir.join("ask"))?;
    let path = store.write(&evaluation::build_trace(&example, None, &result))?;
    let _ = writeln!(out, "\ntrace: {}", path.display());
    Ok(())
}

fn load_examples(cfg: &RunConfig) -> Result<Vec<DatasetExample>, CliError> {
    let dataset = cfg.dataset()?;
    Ok(load_dataset(&dataset.path, dataset.format)?)
}

fn bench(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let examples = load_examples(cfg)?;
    let pipeline = pipeline(cfg)?;
    let root = DatabaseRoot::new(&cfg.database_root);
    let store = TraceStore::create(cfg.output_dir.join("traces"))?;
    let summary = evaluation::run_bench(&pipeline, &examples, &root, &store, cfg.workers, &cfg.echo())?;
    let report_path = cfg.output_dir.join("report.json");
    write_atomically(&report_path, summary.report.to_json().as_bytes())?;

    let _ = out.write_all(render_summary(&summary.report).as_bytes());
    let _ = writeln!(out, "\nreport: {}", report_path.display());
    if summary.skipped > 0 {
        let _ = writeln!(err, "resumed: {} question(s) were already traced", summary.skipped);
    }
    for (qid, message) in &summary.backend_failures {
        let _ = writeln!(err, "question {qid}: {message}");
    }
    match summary.backend_failures.len() {
        0 => Ok(()),
        n => Err(CliError::BackendFailures(n)),
    }
}

fn ablate(cfg: &RunConfig, axis: SweepAxis, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let examples = load_examples(cfg)?;
    let router = cfg.backends.build_router()?;
    let prompts = prompts(cfg)?;
    let root = DatabaseRoot::new(&cfg.database_root);
    let dir = cfg.output_dir.join(format!("ablate-{axis}"));
    let rows = evaluation::run_sweep(
        &router,
        &prompts,
        &cfg.pipeline,
        axis,
        &examples,
        &root,
        &dir,
        cfg.workers,
        &cfg.echo(),
    )?;
    let mut json = serde_json::to_string_pretty(&rows).expect("sweep rows serialise");
    json.push('\n');
    let table_path = dir.join("sweep.json");
    write_atomically(&table_path, json.as_bytes())?;
    let _ = out.write_all(render_sweep_table(&rows).as_bytes());
    let _ = writeln!(out, "\ntable: {}", table_path.display());
    let failures: usize = rows.iter().map(|r| r.backend_failures).sum();
    if failures > 0 {
        let _ = writeln!(err, "{failures} question run(s) hit backend failures");
        return Err(CliError::BackendFailures(failures));
    }
    Ok(())
}
