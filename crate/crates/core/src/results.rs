//! Result-set values and execution-accuracy comparison.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for numeric cells.
pub const NUMERIC_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Blob(Vec<u8>),
}

impl Value {
    fn as_number(&self) -> Option<f64> {
        match *self {
            Value::Integer(i) => Some(i as f64),
            Value::Real(r) => Some(r),
            _ => None,
        }
    }

    /// Cell equality: numbers within [`NUMERIC_TOLERANCE`] regardless of
    /// integer/real storage, everything else exactly.
    pub fn matches(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Integer(a), Value::Integer(b)) => a == b,
            (Value::Null, Value::Null) => true,
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Blob(a), Value::Blob(b)) => a == b,
            _ => match (self.as_number(), other.as_number()) {
                (Some(a), Some(b)) => (a - b).abs() <= NUMERIC_TOLERANCE,
                _ => false,
            },
        }
    }

    fn class(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Integer(_) | Value::Real(_) => 1,
            Value::Text(_) => 2,
            Value::Blob(_) => 3,
        }
    }

    /// Total order used to sort rows before comparison; numbers by value.
    fn order(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Blob(a), Value::Blob(b)) => a.cmp(b),
            _ => match (self.as_number(), other.as_number()) {
                (Some(a), Some(b)) => a.total_cmp(&b),
                _ => self.class().cmp(&other.class()),
            },
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Text(t) => write!(f, "'{t}'"),
            Value::Blob(b) => write!(f, "<blob {} bytes>", b.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("result shapes differ: {left} vs {right} columns")]
pub struct IncomparableShapes {
    pub left: usize,
    pub right: usize,
}

impl ResultTable {
    pub fn arity(&self) -> usize {
        self.rows.first().map_or(self.columns.len(), Vec::len)
    }
}

fn row_order(a: &[Value], b: &[Value]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.order(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

fn row_matches(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.matches(y))
}

/// Set equality of the two row collections: order and duplicates are
/// ignored, columns compare positionally.
pub fn results_match(a: &ResultTable, b: &ResultTable) -> Result<bool, IncomparableShapes> {
    let (left, right) = (a.arity(), b.arity());
    let empty = a.rows.is_empty() || b.rows.is_empty();
    if left != right && !empty {
        return Err(IncomparableShapes { left, right });
    }
    if a.rows.is_empty() || b.rows.is_empty() {
        return Ok(a.rows.is_empty() && b.rows.is_empty());
    }
    Ok(contained(&a.rows, &b.rows) && contained(&b.rows, &a.rows))
}

/// Every row of `needles` matches some row of `hay`.
fn contained(needles: &[Vec<Value>], hay: &[Vec<Value>]) -> bool {
    let mut sorted: Vec<&Vec<Value>> = hay.iter().collect();
    sorted.sort_by(|x, y| row_order(x, y));
    sorted.dedup_by(|x, y| row_order(x, y).is_eq());
    needles.iter().all(|row| {
        // exact-order hit first; the tolerance scan only runs on a miss
        match sorted.binary_search_by(|probe| row_order(probe, row)) {
            Ok(_) => true,
            Err(_) => sorted.iter().any(|candidate| row_matches(candidate, row)),
        }
    })
}
