//! Per-question orchestration: pruning, linking, multi-path generation,
//! multi-candidate sampling, correction and selection.
//!
//! Within one question the generation paths run on separate threads; every
//! other step is sequential. Model calls are tagged with the question id and
//! path so deterministic backends can key their replies on them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use slimsql_core::extract::{extract_answer, extract_columns, extract_index, extract_sql, extract_tables};
use slimsql_core::prompts::PromptError;
use slimsql_core::schema::quote_ident;
use slimsql_core::vote::{dedupe_survivors, modal_vote};
use slimsql_core::{
    Candidate, CandidateId, CandidateOrigin, DatabaseSchema, ExecutionOutcome, ModelRole, PathKind, PipelineConfig,
    PromptSet, SamplingParams, StageKind,
};
use thiserror::Error;

use crate::backend::{BackendError, GenerationRequest, ModelRouter, RequestTag};
use crate::catalog::{CatalogError, Database};
use crate::executor::{self, ExecSettings, ExecutorError};

/// Error text recorded for generations that contained no recognisable SQL.
pub const NO_SQL_FOUND: &str = "no SQL found";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Database(#[from] CatalogError),
    #[error("{stage} stage failed: {source}")]
    Backend { stage: StageKind, source: BackendError },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Executor(#[from] ExecutorError),
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(String),
}

impl PipelineError {
    pub fn is_backend(&self) -> bool {
        matches!(self, PipelineError::Backend { .. })
    }
}

/// One question to answer against one database.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionTask {
    pub question_id: String,
    pub db_id: String,
    pub question: String,
    pub hint: Option<String>,
}

impl QuestionTask {
    pub fn new(question_id: impl Into<String>, db_id: impl Into<String>, question: impl Into<String>) -> Self {
        Self {
            question_id: question_id.into(),
            db_id: db_id.into(),
            question: question.into(),
            hint: None,
        }
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.hint = Some(hint.into());
        self
    }

    fn hint_text(&self) -> &str {
        self.hint.as_deref().unwrap_or("")
    }
}

/// A single model invocation as seen by the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCall {
    pub stage: StageKind,
    pub role: ModelRole,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathKind>,
    /// Candidate being repaired, for correction calls.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<CandidateId>,
    /// 1-based selection round.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round: Option<u32>,
    pub greedy: bool,
    pub attempts: u32,
    pub responses: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineFlags {
    /// Pruning extracted no table, so the full table set was used.
    pub pruning_fallback: bool,
    /// Linking extracted no column; linked paths got an empty column list.
    pub linking_empty: bool,
    /// No selection round produced a usable index; the first executable was taken.
    pub selection_fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection_template: Option<StageKind>,
}

/// A generation path whose model call failed; the other paths still ran.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathFailure {
    pub path: PathKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub selected: Option<Candidate>,
    /// Successful candidates in id order.
    pub executables: Vec<Candidate>,
    /// Initial candidates in path order, followed by corrections.
    pub all_candidates: Vec<Candidate>,
    pub pruned_tables: Vec<String>,
    pub linked_columns: Vec<(String, String)>,
    pub stage_timings: BTreeMap<String, Duration>,
    /// Candidate chosen in each selection round; `None` for unparsable rounds.
    pub selection_votes: Vec<Option<CandidateId>>,
    pub model_calls: Vec<ModelCall>,
    pub flags: PipelineFlags,
    pub path_failures: Vec<PathFailure>,
}

impl PipelineResult {
    /// The selected candidate, or the first candidate when nothing executed.
    pub fn reported(&self) -> Option<&Candidate> {
        self.selected.as_ref().or(self.all_candidates.first())
    }

    /// A copy with every wall-clock measurement zeroed, for comparisons.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        let zero = |c: &mut Candidate| c.outcome.elapsed = Duration::ZERO;
        out.selected.iter_mut().for_each(zero);
        out.executables.iter_mut().for_each(zero);
        out.all_candidates.iter_mut().for_each(zero);
        out.stage_timings.values_mut().for_each(|d| *d = Duration::ZERO);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruningOutcome {
    pub tables: Vec<String>,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionOutcome {
    pub selected: CandidateId,
    pub votes: Vec<Option<CandidateId>>,
    pub template: Option<StageKind>,
    pub fallback: bool,
}

/// Schema text prepared once per question and shared by all paths.
struct SchemaViews {
    full_ddl: String,
    pruned_ddl: String,
    linking: String,
}

impl SchemaViews {
    fn ddl_for(&self, path: PathKind) -> &str {
        if path.uses_pruning() {
            &self.pruned_ddl
        } else {
            &self.full_ddl
        }
    }
}

/// Runs questions through the stages with a fixed configuration.
#[derive(Debug, Clone)]
pub struct Pipeline {
    router: ModelRouter,
    prompts: Arc<PromptSet>,
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(router: ModelRouter, config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate().map_err(PipelineError::InvalidConfig)?;
        Ok(Self {
            router,
            prompts: Arc::new(PromptSet::builtin()),
            config,
        })
    }

    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.prompts = Arc::new(prompts);
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn router(&self) -> &ModelRouter {
        &self.router
    }

    pub fn exec_settings(&self) -> ExecSettings {
        ExecSettings {
            timeout: Duration::from_millis(self.config.timeout_ms),
            row_limit: self.config.row_limit,
        }
    }

    /// Renders `stage`, sends it to the stage's role and logs the call.
    fn call(
        &self,
        task: &QuestionTask,
        stage: StageKind,
        vars: &BTreeMap<&str, &str>,
        sampling: SamplingParams,
        mut log: ModelCall,
    ) -> Result<(Vec<String>, ModelCall), PipelineError> {
        let prompt = self.prompts.render(stage, vars)?;
        let role = self.config.stage_roles.role_for(stage);
        let request = GenerationRequest {
            role,
            stage,
            tag: RequestTag {
                question_id: Some(task.question_id.clone()),
                path: log.path,
            },
            system: prompt.system,
            user: prompt.user,
            sampling,
        };
        let reply = self
            .router
            .generate(&request)
            .map_err(|source| PipelineError::Backend { stage, source })?;
        let texts: Vec<String> = reply.completions.into_iter().map(|c| c.text).collect();
        log.role = role;
        log.greedy = request.sampling.greedy;
        log.attempts = reply.attempts;
        log.responses = texts.clone();
        Ok((texts, log))
    }

    fn log_entry(stage: StageKind) -> ModelCall {
        ModelCall {
            stage,
            role: ModelRole::Chat,
            path: None,
            parent: None,
            round: None,
            greedy: false,
            attempts: 0,
            responses: Vec::new(),
        }
    }

    fn reasoning_sampling(&self) -> SamplingParams {
        SamplingParams::greedy(self.config.reasoning_max_tokens)
    }

    /// Tables judged relevant by the pruning prompt, in schema order.
    ///
    /// Falls back to every table when the reply names none of them.
    pub fn run_pruning(
        &self,
        task: &QuestionTask,
        schema: &DatabaseSchema,
        calls: &mut Vec<ModelCall>,
    ) -> Result<PruningOutcome, PipelineError> {
        let full_ddl = schema.render_full_ddl();
        let tables = schema.table_names().collect::<Vec<_>>().join(", ");
        let vars = BTreeMap::from([
            ("database_name", schema.db_id()),
            ("database_schema", full_ddl.as_str()),
            ("question", task.question.as_str()),
            ("hint", task.hint_text()),
            ("tables", tables.as_str()),
        ]);
        let (texts, log) = self.call(
            task,
            StageKind::Pruning,
            &vars,
            self.reasoning_sampling(),
            Self::log_entry(StageKind::Pruning),
        )?;
        calls.push(log);
        let found = texts
            .first()
            .map(|t| self.scoped(t, |text| extract_tables(text, schema)))
            .unwrap_or_default();
        if found.is_empty() {
            return Ok(PruningOutcome {
                tables: schema.table_names().map(str::to_string).collect(),
                fallback: true,
            });
        }
        Ok(PruningOutcome {
            tables: found,
            fallback: false,
        })
    }

    /// Columns named by the linking prompt, which always sees the full schema.
    pub fn run_linking(
        &self,
        task: &QuestionTask,
        schema: &DatabaseSchema,
        calls: &mut Vec<ModelCall>,
    ) -> Result<Vec<(String, String)>, PipelineError> {
        let full_ddl = schema.render_full_ddl();
        let vars = BTreeMap::from([
            ("database_name", schema.db_id()),
            ("schema", full_ddl.as_str()),
            ("question", task.question.as_str()),
            ("hint", task.hint_text()),
        ]);
        let (texts, log) = self.call(
            task,
            StageKind::Linking,
            &vars,
            self.reasoning_sampling(),
            Self::log_entry(StageKind::Linking),
        )?;
        calls.push(log);
        Ok(texts
            .first()
            .map(|t| self.scoped(t, |text| extract_columns(text, schema)))
            .unwrap_or_default())
    }

    /// Applies `extract` to the text after an answer marker when that yields
    /// something, otherwise to the whole reply. This keeps tables that the
    /// reasoning merely dismisses out of the result when the model states a
    /// final answer.
    fn scoped<T>(&self, text: &str, extract: impl Fn(&str) -> Vec<T>) -> Vec<T> {
        if let Some(answer) = extract_answer(text, &self.config.answer_patterns) {
            let found = extract(&answer);
            if !found.is_empty() {
                return found;
            }
        }
        extract(text)
    }

    fn views(
        &self,
        schema: &DatabaseSchema,
        pruned: &[String],
        linked: &[(String, String)],
    ) -> Result<SchemaViews, PipelineError> {
        let pruned_ddl = schema.render_ddl(pruned).map_err(CatalogError::Schema)?;
        Ok(SchemaViews {
            full_ddl: schema.render_full_ddl(),
            pruned_ddl,
            linking: format_linked_columns(linked),
        })
    }

    /// Samples `candidates_per_path` queries on every active path and
    /// executes them. Ids are assigned in path order starting at 0.
    ///
    /// A path whose model call fails is recorded in `failures` and skipped;
    /// the call fails only when every path does.
    pub fn generate_candidates(
        &self,
        task: &QuestionTask,
        db: &Database,
        pruned: &[String],
        linked: &[(String, String)],
        calls: &mut Vec<ModelCall>,
        failures: &mut Vec<PathFailure>,
    ) -> Result<Vec<Candidate>, PipelineError> {
        let views = self.views(&db.schema, pruned, linked)?;
        self.generate_with_views(task, db, &views, calls, failures)
    }

    fn generate_with_views(
        &self,
        task: &QuestionTask,
        db: &Database,
        views: &SchemaViews,
        calls: &mut Vec<ModelCall>,
        failures: &mut Vec<PathFailure>,
    ) -> Result<Vec<Candidate>, PipelineError> {
        let paths = self.config.toggles.active_paths();
        let per_path = self.config.effective_candidates_per_path();
        let sampling = self
            .config
            .sampling
            .sampled(per_path, self.config.generation_max_tokens);

        let run_path = |path: PathKind| -> Result<(Vec<(String, ExecutionOutcome)>, ModelCall), PipelineError> {
            let stage = if path.uses_linking() {
                StageKind::GenerationWithLinking
            } else {
                StageKind::GenerationWithoutLinking
            };
            let mut vars = BTreeMap::from([
                ("database_name", db.schema.db_id()),
                ("database_schema", views.ddl_for(path)),
                ("question", task.question.as_str()),
                ("hint", task.hint_text()),
            ]);
            if path.uses_linking() {
                vars.insert("schema_linking", views.linking.as_str());
            }
            let log = ModelCall {
                path: Some(path),
                ..Self::log_entry(stage)
            };
            let (texts, log) = self.call(task, stage, &vars, sampling.clone(), log)?;
            let mut executed = Vec::with_capacity(texts.len());
            for text in texts {
                executed.push(self.extract_and_execute(db, &text)?);
            }
            Ok((executed, log))
        };

        let results: Vec<_> = std::thread::scope(|scope| {
            let handles: Vec<_> = paths.iter().map(|&p| scope.spawn(move || run_path(p))).collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|panic| std::panic::resume_unwind(panic)))
                .collect()
        });

        let mut candidates = Vec::new();
        let mut first_error = None;
        for (&path, result) in paths.iter().zip(results) {
            match result {
                Ok((executed, log)) => {
                    calls.push(log);
                    for (sql, outcome) in executed {
                        candidates.push(Candidate {
                            id: candidates.len() as CandidateId,
                            sql,
                            path,
                            origin: CandidateOrigin::Initial,
                            outcome,
                        });
                    }
                }
                Err(err @ PipelineError::Backend { .. }) => {
                    log::warn!("question {}: path {path} failed: {err}", task.question_id);
                    failures.push(PathFailure {
                        path,
                        message: err.to_string(),
                    });
                    first_error.get_or_insert(err);
                }
                Err(err) => return Err(err),
            }
        }
        match first_error {
            Some(err) if candidates.is_empty() => Err(err),
            _ => Ok(candidates),
        }
    }

    /// Extracts SQL from a completion and executes it. Text without SQL is
    /// kept verbatim with a synthetic error so it can still be corrected.
    fn extract_and_execute(&self, db: &Database, text: &str) -> Result<(String, ExecutionOutcome), PipelineError> {
        match extract_sql(text) {
            Some(sql) => {
                let outcome = executor::execute(&db.path, &sql, self.exec_settings())?;
                Ok((sql, outcome))
            }
            None => Ok((
                text.trim().to_string(),
                ExecutionOutcome::error(NO_SQL_FOUND, Duration::ZERO),
            )),
        }
    }

    /// Asks for `correction_candidates` rewrites of a failed candidate and
    /// executes them. Children get ids from `next_id` upwards and are never
    /// corrected themselves.
    pub fn correct(
        &self,
        task: &QuestionTask,
        db: &Database,
        schema_ddl: &str,
        candidate: &Candidate,
        next_id: CandidateId,
        calls: &mut Vec<ModelCall>,
    ) -> Result<Vec<Candidate>, PipelineError> {
        if !candidate.is_failed() {
            return Err(PipelineError::InvalidTask(format!(
                "candidate {} did not fail",
                candidate.id
            )));
        }
        if !matches!(candidate.origin, CandidateOrigin::Initial) {
            return Err(PipelineError::InvalidTask(format!(
                "candidate {} is already a correction",
                candidate.id
            )));
        }
        let error = candidate.outcome.error_message.as_deref().unwrap_or(NO_SQL_FOUND);
        let vars = BTreeMap::from([
            ("schema", schema_ddl),
            ("question", task.question.as_str()),
            ("hint", task.hint_text()),
            ("prev_ans", candidate.sql.as_str()),
            ("errorMsg", error),
        ]);
        let sampling = self
            .config
            .sampling
            .sampled(self.config.correction_candidates, self.config.generation_max_tokens);
        let log = ModelCall {
            path: Some(candidate.path),
            parent: Some(candidate.id),
            ..Self::log_entry(StageKind::Correction)
        };
        let (texts, log) = self.call(task, StageKind::Correction, &vars, sampling, log)?;
        calls.push(log);
        let mut children = Vec::with_capacity(texts.len());
        for (i, text) in texts.iter().enumerate() {
            let (sql, outcome) = self.extract_and_execute(db, text)?;
            children.push(Candidate {
                id: next_id + i as CandidateId,
                sql,
                path: candidate.path,
                origin: CandidateOrigin::Corrected {
                    parent: candidate.id,
                    attempt: u8::try_from(i + 1).unwrap_or(u8::MAX),
                },
                outcome,
            });
        }
        Ok(children)
    }

    /// Picks one of `executables` (given in id order).
    ///
    /// A single executable is returned without model calls. Otherwise the
    /// distinct queries are numbered from 1 and the selection prompt is
    /// issued `selection_rounds` times; the modal index wins, ties going to
    /// the earliest round. When no round yields an index, or selection is
    /// disabled, the first executable is taken.
    pub fn select(
        &self,
        task: &QuestionTask,
        schema: &DatabaseSchema,
        executables: &[Candidate],
        calls: &mut Vec<ModelCall>,
    ) -> Result<SelectionOutcome, PipelineError> {
        let first = executables
            .first()
            .ok_or_else(|| PipelineError::InvalidTask("selection needs at least one executable candidate".into()))?;
        let feq = |fallback| SelectionOutcome {
            selected: first.id,
            votes: Vec::new(),
            template: None,
            fallback,
        };
        if executables.len() == 1 || !self.config.toggles.selection {
            return Ok(feq(false));
        }

        let refs: Vec<&Candidate> = executables.iter().collect();
        let survivors: Vec<&Candidate> = dedupe_survivors(&refs).into_iter().map(|i| refs[i]).collect();
        let previews: Vec<Option<String>> = survivors
            .iter()
            .map(|c| render_preview(c, self.config.result_preview_rows, self.config.result_preview_chars))
            .collect();
        let with_results = previews.iter().all(Option::is_some);
        let stage = if with_results {
            StageKind::SelectionWithResults
        } else {
            StageKind::SelectionQueryOnly
        };
        let mut queries = String::new();
        for (i, c) in survivors.iter().enumerate() {
            if i > 0 {
                queries.push('\n');
            }
            let _ = writeln!(queries, "Index: {}\n```sql\n{}\n```", i + 1, c.sql);
            if let Some(Some(preview)) = with_results.then(|| &previews[i]) {
                let _ = writeln!(queries, "Result:\n{preview}");
            }
        }
        let full_ddl = schema.render_full_ddl();
        let vars = BTreeMap::from([
            ("database_name", schema.db_id()),
            ("database_schema", full_ddl.as_str()),
            ("question", task.question.as_str()),
            ("hint", task.hint_text()),
            ("queries", queries.trim_end()),
        ]);
        let sampling = self.config.sampling.sampled(1, self.config.reasoning_max_tokens);

        let mut votes = Vec::with_capacity(self.config.selection_rounds as usize);
        for round in 1..=self.config.selection_rounds {
            let log = ModelCall {
                round: Some(round),
                ..Self::log_entry(stage)
            };
            let (texts, log) = self.call(task, stage, &vars, sampling.clone(), log)?;
            calls.push(log);
            let vote = texts
                .first()
                .and_then(|t| extract_index(t, survivors.len()))
                .map(|index| survivors[index - 1].id);
            votes.push(vote);
        }
        Ok(match modal_vote(&votes) {
            Some(selected) => SelectionOutcome {
                selected,
                votes,
                template: Some(stage),
                fallback: false,
            },
            None => SelectionOutcome {
                votes,
                template: Some(stage),
                ..feq(true)
            },
        })
    }

    /// Loads nothing: `db` must already match `task.db_id`.
    pub fn run(&self, task: &QuestionTask, db: &Database) -> Result<PipelineResult, PipelineError> {
        if task.question.trim().is_empty() {
            return Err(PipelineError::InvalidTask(format!(
                "question {} is empty",
                task.question_id
            )));
        }
        if db.schema.is_empty() {
            return Err(PipelineError::InvalidTask(format!(
                "database {} has no tables",
                db.db_id()
            )));
        }
        let schema = &db.schema;
        let toggles = self.config.toggles;
        let mut calls = Vec::new();
        let mut flags = PipelineFlags::default();
        let mut timings = BTreeMap::new();
        let mut clock = Instant::now();
        let mut lap = |name: &str, timings: &mut BTreeMap<String, Duration>| {
            let now = Instant::now();
            timings.insert(name.to_string(), now - clock);
            clock = now;
        };
        let started = Instant::now();

        let pruned_tables = if toggles.pruning {
            let outcome = self.run_pruning(task, schema, &mut calls)?;
            flags.pruning_fallback = outcome.fallback;
            outcome.tables
        } else {
            schema.table_names().map(str::to_string).collect()
        };
        lap("pruning", &mut timings);

        let linked_columns = if toggles.linking {
            let linked = self.run_linking(task, schema, &mut calls)?;
            flags.linking_empty = linked.is_empty();
            linked
        } else {
            Vec::new()
        };
        lap("linking", &mut timings);

        let views = self.views(schema, &pruned_tables, &linked_columns)?;
        let mut path_failures = Vec::new();
        let mut all_candidates = self.generate_with_views(task, db, &views, &mut calls, &mut path_failures)?;
        lap("generation", &mut timings);

        if toggles.correction && self.config.correction_candidates > 0 {
            let failed: Vec<Candidate> = all_candidates.iter().filter(|c| c.is_failed()).cloned().collect();
            for parent in &failed {
                let next_id = all_candidates.len() as CandidateId;
                let children = self.correct(task, db, views.ddl_for(parent.path), parent, next_id, &mut calls)?;
                all_candidates.extend(children);
            }
        }
        lap("correction", &mut timings);

        let executables: Vec<Candidate> = all_candidates.iter().filter(|c| c.is_executable()).cloned().collect();
        let (selected, selection_votes) = if executables.is_empty() {
            (None, Vec::new())
        } else {
            let outcome = self.select(task, schema, &executables, &mut calls)?;
            flags.selection_fallback = outcome.fallback;
            flags.selection_template = outcome.template;
            let selected = executables.iter().find(|c| c.id == outcome.selected).cloned();
            (selected, outcome.votes)
        };
        lap("selection", &mut timings);
        timings.insert("total".to_string(), started.elapsed());

        Ok(PipelineResult {
            selected,
            executables,
            all_candidates,
            pruned_tables,
            linked_columns,
            stage_timings: timings,
            selection_votes,
            model_calls: calls,
            flags,
            path_failures,
        })
    }
}

/// `table.column` per line, as supplied to the "Important Columns" section.
pub fn format_linked_columns(linked: &[(String, String)]) -> String {
    linked
        .iter()
        .map(|(t, c)| format!("{}.{}", quote_ident(t), quote_ident(c)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Tabular preview of a successful candidate's result, or `None` when it
/// does not fit within `max_rows` rows and `max_chars` characters.
pub fn render_preview(candidate: &Candidate, max_rows: usize, max_chars: usize) -> Option<String> {
    let outcome = &candidate.outcome;
    if !outcome.is_success() || outcome.truncated || outcome.rows.len() > max_rows {
        return None;
    }
    let mut out = outcome.columns.join(" | ");
    if outcome.rows.is_empty() {
        out.push_str("\n(no rows)");
    }
    for row in &outcome.rows {
        out.push('\n');
        out.push_str(&row.iter().map(ToString::to_string).collect::<Vec<_>>().join(" | "));
    }
    (out.chars().count() <= max_chars).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use slimsql_core::Value;

    fn success(id: CandidateId, rows: usize) -> Candidate {
        Candidate {
            id,
            sql: format!("SELECT {id}"),
            path: PathKind::FullOnly,
            origin: CandidateOrigin::Initial,
            outcome: ExecutionOutcome::success(
                vec!["x".into()],
                (0..rows).map(|i| vec![Value::Integer(i as i64)]).collect(),
                false,
                Duration::ZERO,
            ),
        }
    }

    #[test]
    fn preview_respects_limits() {
        assert_eq!(render_preview(&success(0, 2), 5, 512).unwrap(), "x\n0\n1");
        assert_eq!(render_preview(&success(0, 0), 5, 512).unwrap(), "x\n(no rows)");
        assert!(render_preview(&success(0, 6), 5, 512).is_none());
        assert!(render_preview(&success(0, 5), 5, 4).is_none());
    }

    #[test]
    fn linked_columns_are_qualified() {
        let linked = vec![("Employees".into(), "name".into()), ("free agents".into(), "id".into())];
        assert_eq!(format_linked_columns(&linked), "Employees.name\n`free agents`.id");
    }
}
