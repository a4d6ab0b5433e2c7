//! Schema introspection of SQLite database files.

use std::path::{Path, PathBuf};

use log::warn;
use rusqlite::{Connection, OpenFlags};
use slimsql_core::{ColumnInfo, DatabaseSchema, ForeignKeyInfo, SchemaError, TableInfo};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("database file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("not a database: {path}: {message}")]
    NotADatabase { path: PathBuf, message: String },
    #[error("database `{db_id}` unavailable under {root}")]
    DatabaseUnavailable { db_id: String, root: PathBuf },
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

pub(crate) fn open_read_only(path: &Path) -> rusqlite::Result<Connection> {
    Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX)
}

/// Reads user tables, columns, keys and foreign keys in catalog order.
///
/// Tables whose names start with `sqlite_` are internal and skipped. Foreign
/// keys whose target cannot be resolved are dropped with a warning.
pub fn load_schema(path: &Path) -> Result<DatabaseSchema, CatalogError> {
    if !path.is_file() {
        return Err(CatalogError::FileNotFound(path.to_path_buf()));
    }
    let not_a_db = |e: rusqlite::Error| CatalogError::NotADatabase {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let conn = open_read_only(path).map_err(not_a_db)?;
    let names: Vec<String> = conn
        .prepare("SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' ORDER BY rowid")
        .and_then(|mut stmt| stmt.query_map([], |row| row.get(0))?.collect())
        .map_err(not_a_db)?;

    let mut tables = Vec::with_capacity(names.len());
    for name in &names {
        let columns: Vec<ColumnInfo> = conn
            .prepare("SELECT name, type, \"notnull\", pk FROM pragma_table_info(?1) ORDER BY cid")
            .and_then(|mut stmt| {
                stmt.query_map([name], |row| {
                    Ok(ColumnInfo {
                        name: row.get(0)?,
                        declared_type: row.get::<_, Option<String>>(1)?.unwrap_or_default(),
                        is_not_null: row.get::<_, i64>(2)? != 0,
                        is_primary_key: row.get::<_, i64>(3)? != 0,
                    })
                })?
                .collect()
            })
            .map_err(not_a_db)?;
        tables.push(TableInfo {
            name: name.clone(),
            columns,
            foreign_keys: Vec::new(),
        });
    }

    for i in 0..tables.len() {
        let raw: Vec<(String, String, Option<String>)> = conn
            .prepare("SELECT \"table\", \"from\", \"to\" FROM pragma_foreign_key_list(?1) ORDER BY id, seq")
            .and_then(|mut stmt| {
                stmt.query_map([&tables[i].name], |row| Ok((row.get(0)?, row.get(1)?, row.get(2)?)))?
                    .collect()
            })
            .map_err(not_a_db)?;
        for (to_table, from_column, to_column) in raw {
            match resolve_foreign_key(&tables, i, &from_column, &to_table, to_column.as_deref()) {
                Some(fk) => tables[i].foreign_keys.push(fk),
                None => warn!(
                    "{}: dropping foreign key {}.{} -> {}.{}",
                    path.display(),
                    tables[i].name,
                    from_column,
                    to_table,
                    to_column.as_deref().unwrap_or("<pk>")
                ),
            }
        }
    }

    let db_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(DatabaseSchema::new(db_id, tables)?)
}

/// Canonicalises a catalog foreign key against the loaded tables; a missing
/// target column means the target's primary key.
fn resolve_foreign_key(
    tables: &[TableInfo],
    from: usize,
    from_column: &str,
    to_table: &str,
    to_column: Option<&str>,
) -> Option<ForeignKeyInfo> {
    let source = &tables[from];
    let from_column = source.column(from_column)?;
    let target = tables.iter().find(|t| t.name.eq_ignore_ascii_case(to_table))?;
    let to_column = match to_column {
        Some(c) => target.column(c)?,
        None => target.columns.iter().find(|c| c.is_primary_key)?,
    };
    Some(ForeignKeyInfo {
        from_table: source.name.clone(),
        from_column: from_column.name.clone(),
        to_table: target.name.clone(),
        to_column: to_column.name.clone(),
    })
}

/// A directory laid out as `<root>/<db_id>/<db_id>.sqlite`.
#[derive(Debug, Clone)]
pub struct DatabaseRoot {
    root: PathBuf,
}

impl DatabaseRoot {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, db_id: &str) -> Result<PathBuf, CatalogError> {
        let unavailable = || CatalogError::DatabaseUnavailable {
            db_id: db_id.to_string(),
            root: self.root.clone(),
        };
        if db_id.is_empty() || db_id.contains(['/', '\\']) || db_id == ".." {
            return Err(unavailable());
        }
        let dir = self.root.join(db_id);
        ["sqlite", "db"]
            .iter()
            .map(|ext| dir.join(format!("{db_id}.{ext}")))
            .find(|p| p.is_file())
            .ok_or_else(unavailable)
    }

    pub fn load(&self, db_id: &str) -> Result<Database, CatalogError> {
        Database::open(self.path_for(db_id)?)
    }
}

/// A database file together with its introspected schema.
#[derive(Debug, Clone)]
pub struct Database {
    pub path: PathBuf,
    pub schema: DatabaseSchema,
}

impl Database {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, CatalogError> {
        let path = path.into();
        let schema = load_schema(&path)?;
        Ok(Self { path, schema })
    }

    pub fn db_id(&self) -> &str {
        self.schema.db_id()
    }
}
