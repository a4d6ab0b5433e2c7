//! Generated SQL candidates, their provenance and execution outcomes.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::time::Duration;

use serde::{Deserialize, Serialize};

use crate::results::{ResultTable, Value};

/// Stable ordinal of a candidate within one question.
pub type CandidateId = u32;

/// The four generation prompt variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    PrunedLinked,
    FullLinked,
    PrunedOnly,
    FullOnly,
}

impl PathKind {
    pub const ALL: [PathKind; 4] = [
        PathKind::PrunedLinked,
        PathKind::FullLinked,
        PathKind::PrunedOnly,
        PathKind::FullOnly,
    ];

    pub fn uses_pruning(self) -> bool {
        matches!(self, PathKind::PrunedLinked | PathKind::PrunedOnly)
    }

    pub fn uses_linking(self) -> bool {
        matches!(self, PathKind::PrunedLinked | PathKind::FullLinked)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PathKind::PrunedLinked => "pruned_linked",
            PathKind::FullLinked => "full_linked",
            PathKind::PrunedOnly => "pruned_only",
            PathKind::FullOnly => "full_only",
        }
    }
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CandidateOrigin {
    Initial,
    /// A rewrite of a failed candidate; `attempt` counts from 1.
    Corrected {
        parent: CandidateId,
        attempt: u8,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionStatus {
    Success,
    Error,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionOutcome {
    pub status: ExecutionStatus,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// More rows existed than the row limit allowed.
    pub truncated: bool,
    pub error_message: Option<String>,
    pub elapsed: Duration,
}

impl ExecutionOutcome {
    pub fn success(columns: Vec<String>, rows: Vec<Vec<Value>>, truncated: bool, elapsed: Duration) -> Self {
        Self {
            status: ExecutionStatus::Success,
            columns,
            rows,
            truncated,
            error_message: None,
            elapsed,
        }
    }

    pub fn error(message: impl Into<String>, elapsed: Duration) -> Self {
        let mut message = message.into();
        if message.is_empty() {
            message.push_str("unknown error");
        }
        Self {
            status: ExecutionStatus::Error,
            columns: Vec::new(),
            rows: Vec::new(),
            truncated: false,
            error_message: Some(message),
            elapsed,
        }
    }

    pub fn timeout(message: impl Into<String>, elapsed: Duration) -> Self {
        Self {
            status: ExecutionStatus::Timeout,
            ..Self::error(message, elapsed)
        }
    }

    pub fn is_success(&self) -> bool {
        self.status == ExecutionStatus::Success
    }

    pub fn result_table(&self) -> Option<ResultTable> {
        self.is_success().then(|| ResultTable {
            columns: self.columns.clone(),
            rows: self.rows.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub id: CandidateId,
    pub sql: String,
    pub path: PathKind,
    pub origin: CandidateOrigin,
    pub outcome: ExecutionOutcome,
}

impl Candidate {
    pub fn is_executable(&self) -> bool {
        self.outcome.is_success()
    }

    pub fn is_failed(&self) -> bool {
        matches!(self.outcome.status, ExecutionStatus::Error | ExecutionStatus::Timeout)
    }
}
