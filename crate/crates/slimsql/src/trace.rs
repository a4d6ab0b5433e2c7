//! Per-question provenance records and their on-disk store.
//!
//! Each question is written to its own `<question_id>.jsonl` file holding a
//! single JSON line. Files are written to a temporary name and renamed into
//! place, so an interrupted run never leaves a partial record behind.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slimsql_core::{CandidateId, CandidateJudgement, CandidateOrigin, EvalRecord, ExecutionStatus, PathKind};
use thiserror::Error;

use crate::pipeline::{ModelCall, PathFailure, PipelineFlags};

/// Name of the configuration echo stored next to the trace files.
pub const RUN_CONFIG_FILE: &str = "run_config.json";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace I/O failed for {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt trace {path}: {message}")]
    CorruptTrace { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceCandidate {
    pub id: CandidateId,
    pub sql: String,
    pub path: PathKind,
    pub origin: CandidateOrigin,
    pub status: ExecutionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_message: Option<String>,
    #[serde(default)]
    pub row_count: usize,
    #[serde(default)]
    pub truncated: bool,
    pub correct: bool,
}

impl TraceCandidate {
    pub fn executable(&self) -> bool {
        self.status == ExecutionStatus::Success
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub question_id: String,
    pub db_id: String,
    pub question: String,
    #[serde(default)]
    pub hint: Option<String>,
    #[serde(default)]
    pub difficulty: Option<String>,
    pub gold_sql: String,
    /// Set when the gold query failed; such questions are excluded from N.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_error: Option<String>,
    /// Pipeline failure for this question, attributed to its stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub pruned_tables: Vec<String>,
    pub linked_columns: Vec<(String, String)>,
    pub candidates: Vec<TraceCandidate>,
    pub selection_votes: Vec<Option<CandidateId>>,
    pub selected_id: Option<CandidateId>,
    pub selected_path: Option<PathKind>,
    /// Selected SQL, or the first candidate when nothing executed.
    pub predicted_sql: Option<String>,
    pub executable: bool,
    pub correct: bool,
    #[serde(default)]
    pub flags: PipelineFlags,
    #[serde(default)]
    pub path_failures: Vec<PathFailure>,
    #[serde(default)]
    pub model_calls: Vec<ModelCall>,
    #[serde(default)]
    pub timings_ms: BTreeMap<String, f64>,
}

impl TraceRecord {
    /// The metric input for this question, or `None` when it is excluded.
    pub fn eval_record(&self) -> Option<EvalRecord> {
        if self.gold_error.is_some() {
            return None;
        }
        Some(EvalRecord {
            question_id: self.question_id.clone(),
            difficulty: self.difficulty.clone(),
            predicted_sql: self.predicted_sql.clone(),
            gold_sql: self.gold_sql.clone(),
            executable: self.executable,
            correct: self.correct,
            selected_path: self.selected_path,
            candidate_outcomes: self
                .candidates
                .iter()
                .map(|c| CandidateJudgement {
                    id: c.id,
                    sql: c.sql.clone(),
                    path: c.path,
                    executable: c.executable(),
                    correct: c.correct,
                })
                .collect(),
        })
    }
}

/// Maps a question id onto a portable file stem.
pub fn file_stem(question_id: &str) -> String {
    question_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect::<String>()
        .trim_start_matches('.')
        .to_string()
}

/// A directory of per-question trace files.
#[derive(Debug, Clone)]
pub struct TraceStore {
    dir: PathBuf,
}

impl TraceStore {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self, TraceError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|source| TraceError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self { dir })
    }

    /// Opens an existing directory without creating it.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, TraceError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(TraceError::Io {
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
                path: dir,
            });
        }
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, question_id: &str) -> PathBuf {
        self.dir.join(format!("{}.jsonl", file_stem(question_id)))
    }

    pub fn contains(&self, question_id: &str) -> bool {
        self.path_for(question_id).is_file()
    }

    pub fn write(&self, record: &TraceRecord) -> Result<PathBuf, TraceError> {
        let path = self.path_for(&record.question_id);
        let mut line = serde_json::to_string(record).map_err(|e| TraceError::CorruptTrace {
            path: path.clone(),
            message: e.to_string(),
        })?;
        line.push('\n');
        write_atomically(&path, line.as_bytes())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<TraceRecord, TraceError> {
        let text = std::fs::read_to_string(path).map_err(|source| TraceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let corrupt = |message: String| TraceError::CorruptTrace {
            path: path.to_path_buf(),
            message,
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let line = lines.next().ok_or_else(|| corrupt("empty file".into()))?;
        if lines.next().is_some() {
            return Err(corrupt("more than one record".into()));
        }
        serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))
    }

    /// Every record in the directory, ordered by file name.
    pub fn load_all(&self) -> Result<Vec<TraceRecord>, TraceError> {
        let io = |source| TraceError::Io {
            path: self.dir.clone(),
            source,
        };
        let mut paths = Vec::new();
        for entry in std::fs::read_dir(&self.dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.extension().is_some_and(|e| e == "jsonl") {
                paths.push(path);
            }
        }
        paths.sort();
        paths.iter().map(|p| Self::read(p)).collect()
    }

    pub fn config_path(&self) -> PathBuf {
        self.dir.join(RUN_CONFIG_FILE)
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), TraceError> {
    let io = |source| TraceError::Io {
        path: path.to_path_buf(),
        source,
    };
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("trace");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let mut file = std::fs::File::create(&tmp).map_err(io)?;
    file.write_all(bytes).map_err(io)?;
    file.sync_all().map_err(io)?;
    drop(file);
    std::fs::rename(&tmp, path).map_err(io)
}
