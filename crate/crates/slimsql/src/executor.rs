//! Sandboxed, time-limited execution of model-written SQL.
//!
//! Connections are opened read-only and carry an authorizer that only admits
//! reads, so `DROP`, `ATTACH`, `VACUUM INTO` and temp-table writes fail with
//! the engine's own message. A progress handler interrupts statements that
//! run past their deadline.

use std::path::Path;
use std::time::{Duration, Instant};

use rusqlite::hooks::{AuthAction, AuthContext, Authorization};
use rusqlite::types::ValueRef;
use slimsql_core::{ExecutionOutcome, Value};
use thiserror::Error;

use crate::catalog::open_read_only;

/// Default statement deadline.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
/// Default row cap for result comparison.
pub const DEFAULT_ROW_LIMIT: usize = 10_000;

const PROGRESS_OPS: i32 = 1_000;

#[derive(Debug, Error)]
pub enum ExecutorError {
    #[error("database file unavailable: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy)]
pub struct ExecSettings {
    pub timeout: Duration,
    pub row_limit: usize,
}

impl Default for ExecSettings {
    fn default() -> Self {
        Self {
            timeout: DEFAULT_TIMEOUT,
            row_limit: DEFAULT_ROW_LIMIT,
        }
    }
}

fn authorize(ctx: AuthContext<'_>) -> Authorization {
    match ctx.action {
        AuthAction::Select | AuthAction::Read { .. } | AuthAction::Function { .. } | AuthAction::Recursive => {
            Authorization::Allow
        }
        _ => Authorization::Deny,
    }
}

fn message_of(err: &rusqlite::Error) -> String {
    match err {
        rusqlite::Error::SqliteFailure(_, Some(msg)) => msg.clone(),
        rusqlite::Error::SqlInputError { msg, .. } => msg.clone(),
        other => other.to_string(),
    }
}

fn is_interrupt(err: &rusqlite::Error) -> bool {
    matches!(err, rusqlite::Error::SqliteFailure(e, _) if e.code == rusqlite::ErrorCode::OperationInterrupted)
}

fn to_value(v: ValueRef<'_>) -> Value {
    match v {
        ValueRef::Null => Value::Null,
        ValueRef::Integer(i) => Value::Integer(i),
        ValueRef::Real(r) => Value::Real(r),
        ValueRef::Text(t) => Value::Text(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => Value::Blob(b.to_vec()),
    }
}

/// Runs one statement. Engine errors, authorization failures and timeouts
/// come back in-band; only a vanished database file is an `Err`.
pub fn execute(db_path: &Path, sql: &str, settings: ExecSettings) -> Result<ExecutionOutcome, ExecutorError> {
    let started = Instant::now();
    if !db_path.is_file() {
        return Err(ExecutorError::Io(db_path.display().to_string()));
    }
    if sql.trim().is_empty() {
        return Ok(ExecutionOutcome::error("empty query", started.elapsed()));
    }
    let conn = match open_read_only(db_path) {
        Ok(c) => c,
        Err(e) => return Err(ExecutorError::Io(format!("{}: {}", db_path.display(), message_of(&e)))),
    };
    conn.authorizer(Some(authorize));
    let deadline = started + settings.timeout;
    conn.progress_handler(PROGRESS_OPS, Some(move || Instant::now() >= deadline));

    let fail = |err: rusqlite::Error| {
        if is_interrupt(&err) {
            ExecutionOutcome::timeout(
                format!("{} (exceeded {} ms)", message_of(&err), settings.timeout.as_millis()),
                started.elapsed(),
            )
        } else {
            ExecutionOutcome::error(message_of(&err), started.elapsed())
        }
    };

    let mut stmt = match conn.prepare(sql) {
        Ok(s) => s,
        Err(e) => return Ok(fail(e)),
    };
    // catches statements the authorizer is never asked about, such as a
    // bare REINDEX; every query yields at least one column
    if !stmt.readonly() || stmt.column_count() == 0 {
        return Ok(ExecutionOutcome::error(
            "only read-only queries are allowed",
            started.elapsed(),
        ));
    }
    let columns: Vec<String> = stmt.column_names().into_iter().map(str::to_string).collect();
    let width = columns.len();
    let mut rows = stmt.raw_query();
    let mut out: Vec<Vec<Value>> = Vec::new();
    let mut truncated = false;
    loop {
        match rows.next() {
            Ok(Some(row)) => {
                if out.len() == settings.row_limit {
                    truncated = true;
                    break;
                }
                let mut values = Vec::with_capacity(width);
                for i in 0..width {
                    match row.get_ref(i) {
                        Ok(v) => values.push(to_value(v)),
                        Err(e) => return Ok(fail(e)),
                    }
                }
                out.push(values);
            }
            Ok(None) => break,
            Err(e) => return Ok(fail(e)),
        }
    }
    Ok(ExecutionOutcome::success(columns, out, truncated, started.elapsed()))
}
