//! Execution accuracy (EX), execution proportion (EP), Top-N and path attribution.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidate::{CandidateId, PathKind};

/// Cut-offs reported in the cumulative Top-N table.
pub const DEFAULT_TOP_N: [u32; 4] = [1, 3, 5, 7];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no records to aggregate")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateJudgement {
    pub id: CandidateId,
    pub sql: String,
    pub path: PathKind,
    pub executable: bool,
    pub correct: bool,
}

/// One judged question. `correct` implies `executable`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub question_id: String,
    #[serde(default)]
    pub difficulty: Option<String>,
    pub predicted_sql: Option<String>,
    pub gold_sql: String,
    pub executable: bool,
    pub correct: bool,
    pub selected_path: Option<PathKind>,
    #[serde(default)]
    pub candidate_outcomes: Vec<CandidateJudgement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub total: usize,
    pub ex_percent: f64,
    pub ep_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Questions counted (N).
    pub total: usize,
    /// Questions left out because their gold query failed.
    pub excluded: usize,
    pub correct: usize,
    pub executable: usize,
    pub ex_percent: f64,
    pub ep_percent: f64,
    pub per_difficulty: BTreeMap<String, Breakdown>,
    /// Correct answers by the path of the selected candidate.
    pub path_distribution: BTreeMap<PathKind, usize>,
    pub top_n: BTreeMap<u32, f64>,
}

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

pub fn compute_report(records: &[EvalRecord]) -> Result<Report, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let total = records.len();
    let correct = records.iter().filter(|r| r.correct).count();
    let executable = records.iter().filter(|r| r.executable).count();

    let mut by_difficulty: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for r in records {
        if let Some(d) = &r.difficulty {
            let entry = by_difficulty.entry(d.clone()).or_default();
            entry.0 += 1;
            entry.1 += usize::from(r.correct);
            entry.2 += usize::from(r.executable);
        }
    }
    let per_difficulty = by_difficulty
        .into_iter()
        .map(|(d, (n, c, e))| {
            let b = Breakdown {
                total: n,
                ex_percent: percent(c, n),
                ep_percent: percent(e, n),
            };
            (d, b)
        })
        .collect();

    let mut path_distribution: BTreeMap<PathKind, usize> = PathKind::ALL.iter().map(|&p| (p, 0)).collect();
    for r in records.iter().filter(|r| r.correct) {
        if let Some(p) = r.selected_path {
            *path_distribution.entry(p).or_default() += 1;
        }
    }

    let top_n = DEFAULT_TOP_N.iter().map(|&n| (n, top_n(records, n as usize))).collect();

    Ok(Report {
        total,
        excluded: 0,
        correct,
        executable,
        ex_percent: percent(correct, total),
        ep_percent: percent(executable, total),
        per_difficulty,
        path_distribution,
        top_n,
    })
}

/// Percentage of questions with a correct candidate among their first `n`
/// candidates in id order.
pub fn top_n(records: &[EvalRecord], n: usize) -> f64 {
    let hits = records
        .iter()
        .filter(|r| {
            let mut ordered: Vec<&CandidateJudgement> = r.candidate_outcomes.iter().collect();
            ordered.sort_by_key(|c| c.id);
            ordered.iter().take(n).any(|c| c.correct)
        })
        .count();
    percent(hits, records.len())
}
