//! Judging predictions against gold queries, benchmark runs and sweeps.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use slimsql_core::config::{CANDIDATE_SWEEP, ROUNDS_SWEEP};
use slimsql_core::metrics::{compute_report, DEFAULT_TOP_N};
use slimsql_core::results::results_match;
use slimsql_core::{
    CandidateOrigin, ComponentToggles, EvalRecord, ExecutionOutcome, PathKind, PipelineConfig, PromptSet, Report,
    ResultTable,
};
use thiserror::Error;

use crate::backend::ModelRouter;
use crate::catalog::{Database, DatabaseRoot};
use crate::dataset::DatasetExample;
use crate::executor::{self, ExecSettings};
use crate::pipeline::{Pipeline, PipelineError, PipelineResult};
use crate::trace::{write_atomically, TraceCandidate, TraceError, TraceRecord, TraceStore};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold query failed: {0}")]
    GoldFailed(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("{path} was written by a different configuration; use a fresh output directory")]
    ConfigMismatch { path: PathBuf },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgement {
    pub executable: bool,
    pub correct: bool,
}

/// Executes a gold query. Failures, and results cut off by the row limit,
/// are returned as messages since they make the question unscoreable.
pub fn execute_gold(db_path: &Path, gold_sql: &str, settings: ExecSettings) -> Result<ResultTable, String> {
    let outcome = executor::execute(db_path, gold_sql, settings).map_err(|e| e.to_string())?;
    if outcome.truncated {
        return Err(format!("gold result exceeds the row limit of {}", settings.row_limit));
    }
    match outcome.result_table() {
        Some(table) => Ok(table),
        None => Err(outcome.error_message.unwrap_or_else(|| "gold query failed".into())),
    }
}

/// Executable when the query ran; correct when additionally its complete
/// result equals the gold result as a set of rows.
pub fn judge_outcome(outcome: &ExecutionOutcome, gold: &ResultTable) -> Judgement {
    let executable = outcome.is_success();
    let correct = executable
        && !outcome.truncated
        && outcome
            .result_table()
            .is_some_and(|table| results_match(&table, gold).unwrap_or(false));
    Judgement { executable, correct }
}

pub fn judge(
    db_path: &Path,
    predicted_sql: &str,
    gold_sql: &str,
    settings: ExecSettings,
) -> Result<Judgement, EvalError> {
    let gold = execute_gold(db_path, gold_sql, settings).map_err(EvalError::GoldFailed)?;
    let outcome =
        executor::execute(db_path, predicted_sql, settings).map_err(|e| EvalError::GoldFailed(e.to_string()))?;
    Ok(judge_outcome(&outcome, &gold))
}

fn base_trace(example: &DatasetExample) -> TraceRecord {
    TraceRecord {
        question_id: example.question_id.clone(),
        db_id: example.db_id.clone(),
        question: example.question.clone(),
        hint: example.hint.clone(),
        difficulty: example.difficulty.clone(),
        gold_sql: example.gold_sql.clone(),
        gold_error: None,
        error: None,
        pruned_tables: Vec::new(),
        linked_columns: Vec::new(),
        candidates: Vec::new(),
        selection_votes: Vec::new(),
        selected_id: None,
        selected_path: None,
        predicted_sql: None,
        executable: false,
        correct: false,
        flags: Default::default(),
        path_failures: Vec::new(),
        model_calls: Vec::new(),
        timings_ms: BTreeMap::new(),
    }
}

/// Trace for a question whose gold query or database was unusable.
pub fn excluded_trace(example: &DatasetExample, gold_error: impl Into<String>) -> TraceRecord {
    TraceRecord {
        gold_error: Some(gold_error.into()),
        ..base_trace(example)
    }
}

/// Trace for a question the pipeline could not finish for a non-transport reason.
pub fn failed_trace(example: &DatasetExample, error: &PipelineError) -> TraceRecord {
    TraceRecord {
        error: Some(error.to_string()),
        ..base_trace(example)
    }
}

/// Judges every candidate of a pipeline run and records its provenance.
/// Without a gold result nothing is marked correct.
pub fn build_trace(example: &DatasetExample, gold: Option<&ResultTable>, result: &PipelineResult) -> TraceRecord {
    let assess = |outcome: &ExecutionOutcome| match gold {
        Some(gold) => judge_outcome(outcome, gold),
        None => Judgement {
            executable: outcome.is_success(),
            correct: false,
        },
    };
    let candidates: Vec<TraceCandidate> = result
        .all_candidates
        .iter()
        .map(|c| TraceCandidate {
            id: c.id,
            sql: c.sql.clone(),
            path: c.path,
            origin: c.origin,
            status: c.outcome.status,
            error_message: c.outcome.error_message.clone(),
            row_count: c.outcome.rows.len(),
            truncated: c.outcome.truncated,
            correct: assess(&c.outcome).correct,
        })
        .collect();
    let selected = result.selected.as_ref();
    let judged = selected.map(|s| assess(&s.outcome));
    TraceRecord {
        pruned_tables: result.pruned_tables.clone(),
        linked_columns: result.linked_columns.clone(),
        candidates,
        selection_votes: result.selection_votes.clone(),
        selected_id: selected.map(|s| s.id),
        selected_path: selected.map(|s| s.path),
        predicted_sql: result.reported().map(|c| c.sql.clone()),
        executable: judged.is_some_and(|j| j.executable),
        correct: judged.is_some_and(|j| j.correct),
        flags: result.flags.clone(),
        path_failures: result.path_failures.clone(),
        model_calls: result.model_calls.clone(),
        timings_ms: result
            .stage_timings
            .iter()
            .map(|(k, v)| (k.clone(), v.as_secs_f64() * 1000.0))
            .collect(),
        ..base_trace(example)
    }
}

/// Aggregate metrics plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: Json,
    /// Trace records found, including excluded questions.
    pub questions: usize,
    pub metrics: Report,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialises");
        text.push('\n');
        text
    }
}

fn empty_report(excluded: usize) -> Report {
    Report {
        total: 0,
        excluded,
        correct: 0,
        executable: 0,
        ex_percent: 0.0,
        ep_percent: 0.0,
        per_difficulty: BTreeMap::new(),
        path_distribution: PathKind::ALL.iter().map(|&p| (p, 0)).collect(),
        top_n: DEFAULT_TOP_N.iter().map(|&n| (n, 0.0)).collect(),
    }
}

/// Metrics over trace records; questions with a failed gold query are
/// excluded from N and counted separately.
pub fn metrics_from_traces(traces: &[TraceRecord]) -> Report {
    let records: Vec<EvalRecord> = traces.iter().filter_map(TraceRecord::eval_record).collect();
    let excluded = traces.len() - records.len();
    match compute_report(&records) {
        Ok(report) => Report { excluded, ..report },
        Err(_) => empty_report(excluded),
    }
}

pub fn build_report(traces: &[TraceRecord], config: Json) -> BenchReport {
    BenchReport {
        config,
        questions: traces.len(),
        metrics: metrics_from_traces(traces),
    }
}

/// Recomputes the report of a finished run from its trace directory alone.
pub fn report_from_store(store: &TraceStore) -> Result<BenchReport, EvalError> {
    let traces = store.load_all()?;
    let config_path = store.config_path();
    let config = if config_path.is_file() {
        read_json(&config_path)?
    } else {
        Json::Null
    };
    Ok(build_report(&traces, config))
}

/// Human-readable summary: headline metrics, difficulty split, path
/// attribution of correct answers and cumulative Top-N.
pub fn render_summary(report: &BenchReport) -> String {
    let m = &report.metrics;
    let mut out = String::new();
    let _ = writeln!(out, "questions  {} (excluded {})", m.total, m.excluded);
    let _ = writeln!(out, "EX         {:.2}%  ({} correct)", m.ex_percent, m.correct);
    let _ = writeln!(out, "EP         {:.2}%  ({} executable)", m.ep_percent, m.executable);
    if !m.per_difficulty.is_empty() {
        let _ = writeln!(out, "\n{:<12} {:>6} {:>8} {:>8}", "difficulty", "N", "EX", "EP");
        for (d, b) in &m.per_difficulty {
            let _ = writeln!(
                out,
                "{:<12} {:>6} {:>8.2} {:>8.2}",
                d, b.total, b.ex_percent, b.ep_percent
            );
        }
    }
    let _ = writeln!(out, "\n{:<16} {:>8} {:>8}", "path", "correct", "share");
    for (path, count) in &m.path_distribution {
        let share = if m.correct == 0 {
            0.0
        } else {
            100.0 * *count as f64 / m.correct as f64
        };
        let _ = writeln!(out, "{:<16} {:>8} {:>7.2}%", path.as_str(), count, share);
    }
    let _ = writeln!(out, "\n{:<8} {:>8}", "top-n", "acc");
    for (n, acc) in &m.top_n {
        let _ = writeln!(out, "{:<8} {:>7.2}%", format!("top-{n}"), acc);
    }
    out
}

/// Databases loaded on first use and shared between workers.
#[derive(Debug)]
pub struct DatabaseCache {
    root: DatabaseRoot,
    loaded: Mutex<HashMap<String, Result<Arc<Database>, String>>>,
}

impl DatabaseCache {
    pub fn new(root: DatabaseRoot) -> Self {
        Self {
            root,
            loaded: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(&self, db_id: &str) -> Result<Arc<Database>, String> {
        let mut loaded = self.loaded.lock().unwrap_or_else(|e| e.into_inner());
        loaded
            .entry(db_id.to_string())
            .or_insert_with(|| self.root.load(db_id).map(Arc::new).map_err(|e| e.to_string()))
            .clone()
    }
}

/// Runs one example end to end. Transport-level backend failures are
/// returned as errors so the question can be retried on a later run.
pub fn evaluate_example(
    pipeline: &Pipeline,
    databases: &DatabaseCache,
    example: &DatasetExample,
) -> Result<TraceRecord, PipelineError> {
    let db = match databases.get(&example.db_id) {
        Ok(db) => db,
        Err(message) => return Ok(excluded_trace(example, message)),
    };
    let gold = match execute_gold(&db.path, &example.gold_sql, pipeline.exec_settings()) {
        Ok(gold) => gold,
        Err(message) => {
            warn!("question {}: gold query failed: {message}", example.question_id);
            return Ok(excluded_trace(example, message));
        }
    };
    match pipeline.run(&example.task(), &db) {
        Ok(result) => Ok(build_trace(example, Some(&gold), &result)),
        Err(err) if err.is_backend() => Err(err),
        Err(err) => {
            warn!("question {}: {err}", example.question_id);
            Ok(failed_trace(example, &err))
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchSummary {
    pub report: BenchReport,
    /// Questions already traced by an earlier run.
    pub skipped: usize,
    /// Questions abandoned because a backend failed; rerun to retry them.
    pub backend_failures: Vec<(String, String)>,
}

/// Evaluates every example not yet traced in `store`, then recomputes the
/// report from the whole store.
pub fn run_bench(
    pipeline: &Pipeline,
    examples: &[DatasetExample],
    root: &DatabaseRoot,
    store: &TraceStore,
    workers: usize,
    config_echo: &Json,
) -> Result<BenchSummary, EvalError> {
    claim_store(store, config_echo)?;
    let pending: Vec<&DatasetExample> = examples.iter().filter(|e| !store.contains(&e.question_id)).collect();
    let skipped = examples.len() - pending.len();
    if skipped > 0 {
        info!("resuming: {skipped} questions already traced");
    }
    let databases = DatabaseCache::new(root.clone());
    let next = AtomicUsize::new(0);
    let failures = Mutex::new(Vec::new());
    let write_error = Mutex::new(None);
    let workers = workers.clamp(1, pending.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(example) = pending.get(i) else { break };
                match evaluate_example(pipeline, &databases, example) {
                    Ok(trace) => {
                        if let Err(err) = store.write(&trace) {
                            write_error.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(err);
                            break;
                        }
                        info!("[{}/{}] question {} done", i + 1, pending.len(), example.question_id);
                    }
                    Err(err) => {
                        warn!("question {}: {err}", example.question_id);
                        failures
                            .lock()
                            .unwrap_or_else(|e| e.into_inner())
                            .push((example.question_id.clone(), err.to_string()));
                    }
                }
            });
        }
    });
    if let Some(err) = write_error.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(err.into());
    }
    let mut backend_failures = failures.into_inner().unwrap_or_else(|e| e.into_inner());
    backend_failures.sort();
    Ok(BenchSummary {
        report: report_from_store(store)?,
        skipped,
        backend_failures,
    })
}

/// Records the configuration of a run in its trace directory, refusing to
/// mix traces produced by different configurations.
fn claim_store(store: &TraceStore, config_echo: &Json) -> Result<(), EvalError> {
    let path = store.config_path();
    if path.is_file() {
        let existing = read_json(&path)?;
        if &existing != config_echo {
            return Err(EvalError::ConfigMismatch { path });
        }
        return Ok(());
    }
    let mut text = serde_json::to_string_pretty(config_echo).expect("config serialises");
    text.push('\n');
    write_atomically(&path, text.as_bytes())?;
    Ok(())
}

fn read_json(path: &Path) -> Result<Json, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| TraceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text).map_err(|e| TraceError::CorruptTrace {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// The full pipeline and one row per removed component.
    Components,
    /// Candidates per path from 1 to 6 (pool 4 to 24).
    Candidates,
    /// Selection rounds 1, 3, 5 and 7.
    Rounds,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Components => "components",
            SweepAxis::Candidates => "candidates",
            SweepAxis::Rounds => "rounds",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "components" => Ok(SweepAxis::Components),
            "candidates" => Ok(SweepAxis::Candidates),
            "rounds" => Ok(SweepAxis::Rounds),
            other => Err(format!(
                "unknown axis `{other}` (expected components, candidates or rounds)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSetting {
    pub label: String,
    pub config: PipelineConfig,
}

impl SweepSetting {
    /// Directory name for this setting's traces.
    pub fn slug(&self) -> String {
        let mut slug = String::new();
        for c in self.label.chars() {
            if c.is_ascii_alphanumeric() {
                slug.push(c.to_ascii_lowercase());
            } else if !slug.is_empty() && !slug.ends_with('_') {
                slug.push('_');
            }
        }
        slug.trim_end_matches('_').to_string()
    }
}

/// One configuration per setting of `axis`, everything else taken from `base`.
pub fn sweep_settings(axis: SweepAxis, base: &PipelineConfig) -> Vec<SweepSetting> {
    match axis {
        SweepAxis::Components => ComponentToggles::ablation_matrix()
            .into_iter()
            .map(|(label, toggles)| SweepSetting {
                label: label.to_string(),
                config: PipelineConfig {
                    toggles,
                    ..base.clone()
                },
            })
            .collect(),
        SweepAxis::Candidates => CANDIDATE_SWEEP
            .into_iter()
            .map(|n| {
                let config = PipelineConfig {
                    candidates_per_path: n,
                    ..base.clone()
                };
                SweepSetting {
                    label: format!("pool {}", config.initial_pool_size()),
                    config,
                }
            })
            .collect(),
        SweepAxis::Rounds => ROUNDS_SWEEP
            .into_iter()
            .map(|r| SweepSetting {
                label: format!("rounds {r}"),
                config: PipelineConfig {
                    selection_rounds: r,
                    ..base.clone()
                },
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub setting: String,
    pub candidates_per_path: u32,
    pub pool_size: usize,
    pub selection_rounds: u32,
    pub toggles: ComponentToggles,
    pub total: usize,
    pub excluded: usize,
    pub ex_percent: f64,
    pub ep_percent: f64,
    pub top_n: BTreeMap<u32, f64>,
    pub backend_failures: usize,
}

/// Runs the benchmark once per setting of `axis`, each into its own
/// subdirectory of `out_dir`.
#[allow(clippy::too_many_arguments)]
pub fn run_sweep(
    router: &ModelRouter,
    prompts: &PromptSet,
    base: &PipelineConfig,
    axis: SweepAxis,
    examples: &[DatasetExample],
    root: &DatabaseRoot,
    out_dir: &Path,
    workers: usize,
    config_echo: &Json,
) -> Result<Vec<SweepRow>, EvalError> {
    let mut rows = Vec::new();
    for setting in sweep_settings(axis, base) {
        info!("sweep {axis}: {}", setting.label);
        let pipeline = Pipeline::new(router.clone(), setting.config.clone())?.with_prompts(prompts.clone());
        let store = TraceStore::create(out_dir.join(setting.slug()))?;
        let mut echo = config_echo.clone();
        if let Json::Object(map) = &mut echo {
            map.insert(
                "pipeline".into(),
                serde_json::to_value(&setting.config).expect("config serialises"),
            );
            map.insert("sweep".into(), Json::String(setting.label.clone()));
        }
        let summary = run_bench(&pipeline, examples, root, &store, workers, &echo)?;
        let m = &summary.report.metrics;
        rows.push(SweepRow {
            setting: setting.label.clone(),
            candidates_per_path: setting.config.effective_candidates_per_path(),
            pool_size: setting.config.initial_pool_size(),
            selection_rounds: setting.config.selection_rounds,
            toggles: setting.config.toggles,
            total: m.total,
            excluded: m.excluded,
            ex_percent: m.ex_percent,
            ep_percent: m.ep_percent,
            top_n: m.top_n.clone(),
            backend_failures: summary.backend_failures.len(),
        });
    }
    Ok(rows)
}

pub fn render_sweep_table(rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{:<24} {:>5} {:>7} {:>5} {:>8} {:>8}\n",
        "setting", "pool", "rounds", "N", "EX", "EP"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<24} {:>5} {:>7} {:>5} {:>8.2} {:>8.2}",
            r.setting, r.pool_size, r.selection_rounds, r.total, r.ex_percent, r.ep_percent
        );
    }
    out
}

/// Corrections recorded in a trace, by parent id.
pub fn correction_children(trace: &TraceRecord) -> BTreeMap<u32, Vec<u32>> {
    let mut out: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for c in &trace.candidates {
        if let CandidateOrigin::Corrected { parent, .. } = c.origin {
            out.entry(parent).or_default().push(c.id);
        }
    }
    out
}
