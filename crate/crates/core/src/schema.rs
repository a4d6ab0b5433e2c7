//! In-memory model of a relational schema and its DDL rendering.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::text::{eq_ci, fold};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("empty identifier in table `{0}`")]
    EmptyName(String),
    #[error("duplicate table `{0}`")]
    DuplicateTable(String),
    #[error("duplicate column `{column}` in table `{table}`")]
    DuplicateColumn { table: String, column: String },
    #[error("table `{0}` has no columns")]
    NoColumns(String),
    #[error("foreign key {from_table}.{from_column} -> {to_table}.{to_column} does not resolve")]
    DanglingForeignKey {
        from_table: String,
        from_column: String,
        to_table: String,
        to_column: String,
    },
    #[error("unknown table `{0}`")]
    UnknownTable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColumnInfo {
    pub name: String,
    /// Type text exactly as stored in the catalog; may be empty.
    pub declared_type: String,
    pub is_primary_key: bool,
    pub is_not_null: bool,
}

impl ColumnInfo {
    pub fn new(name: impl Into<String>, declared_type: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            declared_type: declared_type.into(),
            is_primary_key: false,
            is_not_null: false,
        }
    }

    pub fn primary_key(mut self) -> Self {
        self.is_primary_key = true;
        self
    }

    pub fn not_null(mut self) -> Self {
        self.is_not_null = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ForeignKeyInfo {
    pub from_table: String,
    pub from_column: String,
    pub to_table: String,
    pub to_column: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableInfo {
    pub name: String,
    pub columns: Vec<ColumnInfo>,
    pub foreign_keys: Vec<ForeignKeyInfo>,
}

impl TableInfo {
    pub fn new(name: impl Into<String>, columns: Vec<ColumnInfo>) -> Self {
        Self {
            name: name.into(),
            columns,
            foreign_keys: Vec::new(),
        }
    }

    pub fn with_foreign_key(mut self, from_column: &str, to_table: &str, to_column: &str) -> Self {
        self.foreign_keys.push(ForeignKeyInfo {
            from_table: self.name.clone(),
            from_column: from_column.to_string(),
            to_table: to_table.to_string(),
            to_column: to_column.to_string(),
        });
        self
    }

    pub fn column(&self, name: &str) -> Option<&ColumnInfo> {
        self.columns.iter().find(|c| eq_ci(&c.name, name))
    }
}

/// A table, optionally narrowed to one of its columns, found by name lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolved<'a> {
    pub table: &'a str,
    pub column: Option<&'a str>,
}

/// Tables of one database in catalog order. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatabaseSchema {
    db_id: String,
    tables: Vec<TableInfo>,
}

impl DatabaseSchema {
    /// Validates name uniqueness, non-empty tables and foreign-key targets.
    pub fn new(db_id: impl Into<String>, tables: Vec<TableInfo>) -> Result<Self, SchemaError> {
        let mut seen: Vec<String> = Vec::with_capacity(tables.len());
        for table in &tables {
            if table.name.is_empty() {
                return Err(SchemaError::EmptyName(String::new()));
            }
            let key = fold(&table.name);
            if seen.contains(&key) {
                return Err(SchemaError::DuplicateTable(table.name.clone()));
            }
            seen.push(key);
            if table.columns.is_empty() {
                return Err(SchemaError::NoColumns(table.name.clone()));
            }
            let mut cols: Vec<String> = Vec::with_capacity(table.columns.len());
            for column in &table.columns {
                if column.name.is_empty() {
                    return Err(SchemaError::EmptyName(table.name.clone()));
                }
                let key = fold(&column.name);
                if cols.contains(&key) {
                    return Err(SchemaError::DuplicateColumn {
                        table: table.name.clone(),
                        column: column.name.clone(),
                    });
                }
                cols.push(key);
            }
        }
        let schema = Self {
            db_id: db_id.into(),
            tables,
        };
        for fk in schema.tables.iter().flat_map(|t| &t.foreign_keys) {
            let resolves = schema
                .table(&fk.from_table)
                .and_then(|t| t.column(&fk.from_column))
                .is_some()
                && schema
                    .table(&fk.to_table)
                    .and_then(|t| t.column(&fk.to_column))
                    .is_some();
            if !resolves {
                return Err(SchemaError::DanglingForeignKey {
                    from_table: fk.from_table.clone(),
                    from_column: fk.from_column.clone(),
                    to_table: fk.to_table.clone(),
                    to_column: fk.to_column.clone(),
                });
            }
        }
        Ok(schema)
    }

    pub fn db_id(&self) -> &str {
        &self.db_id
    }

    pub fn tables(&self) -> &[TableInfo] {
        &self.tables
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn table(&self, name: &str) -> Option<&TableInfo> {
        self.tables.iter().find(|t| eq_ci(&t.name, name))
    }

    pub fn table_names(&self) -> impl Iterator<Item = &str> {
        self.tables.iter().map(|t| t.name.as_str())
    }

    /// Tables that define a column with this name (case-insensitive).
    pub fn tables_with_column<'a, 'c>(
        &'a self,
        column: &'c str,
    ) -> impl Iterator<Item = (&'a TableInfo, &'a ColumnInfo)> + 'c
    where
        'a: 'c,
    {
        self.tables.iter().filter_map(move |t| t.column(column).map(|c| (t, c)))
    }

    /// Looks a token up as `table`, `table.column` or a bare column name.
    ///
    /// Quoting with backticks, double quotes or brackets is accepted around
    /// each part. Table names win over column names; a bare column defined in
    /// more than one table does not resolve.
    pub fn resolve_identifier(&self, token: &str) -> Option<Resolved<'_>> {
        let parts = split_qualified(token.trim())?;
        match parts.as_slice() {
            [name] => {
                if let Some(table) = self.table(name) {
                    return Some(Resolved {
                        table: &table.name,
                        column: None,
                    });
                }
                let mut hits = self.tables_with_column(name);
                let (table, column) = hits.next()?;
                if hits.next().is_some() {
                    return None;
                }
                Some(Resolved {
                    table: &table.name,
                    column: Some(&column.name),
                })
            }
            [table, column] => {
                let table = self.table(table)?;
                let column = table.column(column)?;
                Some(Resolved {
                    table: &table.name,
                    column: Some(&column.name),
                })
            }
            _ => None,
        }
    }

    /// DDL for every table, in catalog order.
    pub fn render_full_ddl(&self) -> String {
        self.render_filtered(|_| true)
    }

    /// One `CREATE TABLE` per kept table, in catalog order.
    ///
    /// Foreign-key clauses survive only when both endpoints are kept.
    pub fn render_ddl<I, S>(&self, keep: I) -> Result<String, SchemaError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut kept: Vec<String> = Vec::new();
        for name in keep {
            let name = name.as_ref();
            let table = self
                .table(name)
                .ok_or_else(|| SchemaError::UnknownTable(name.to_string()))?;
            kept.push(fold(&table.name));
        }
        Ok(self.render_filtered(|t| kept.contains(&fold(&t.name))))
    }

    fn render_filtered(&self, keep: impl Fn(&TableInfo) -> bool) -> String {
        let mut out = String::new();
        let kept: Vec<&TableInfo> = self.tables.iter().filter(|t| keep(t)).collect();
        for (i, table) in kept.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            let fks: Vec<&ForeignKeyInfo> = table
                .foreign_keys
                .iter()
                .filter(|fk| kept.iter().any(|t| eq_ci(&t.name, &fk.to_table)))
                .collect();
            write_create_table(&mut out, table, &fks);
        }
        out
    }
}

fn write_create_table(out: &mut String, table: &TableInfo, fks: &[&ForeignKeyInfo]) {
    let pk: Vec<&ColumnInfo> = table.columns.iter().filter(|c| c.is_primary_key).collect();
    let inline_pk = pk.len() == 1;
    let mut lines: Vec<String> = Vec::new();
    for column in &table.columns {
        let mut line = format!("    {}", quote_ident(&column.name));
        if !column.declared_type.is_empty() {
            line.push(' ');
            line.push_str(&column.declared_type);
        }
        if inline_pk && column.is_primary_key {
            line.push_str(" PRIMARY KEY");
        }
        if column.is_not_null {
            line.push_str(" NOT NULL");
        }
        lines.push(line);
    }
    if pk.len() > 1 {
        let names: Vec<String> = pk.iter().map(|c| quote_ident(&c.name)).collect();
        lines.push(format!("    PRIMARY KEY ({})", names.join(", ")));
    }
    for fk in fks {
        lines.push(format!(
            "    FOREIGN KEY ({}) REFERENCES {}({})",
            quote_ident(&fk.from_column),
            quote_ident(&fk.to_table),
            quote_ident(&fk.to_column)
        ));
    }
    let _ = write!(
        out,
        "CREATE TABLE {} (\n{}\n);",
        quote_ident(&table.name),
        lines.join(",\n")
    );
}

/// Backtick-quotes names that are not plain SQL identifiers.
pub fn quote_ident(name: &str) -> String {
    let mut chars = name.chars();
    let plain = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        name.to_string()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}

/// Splits `a.b` on dots outside quotes and strips the quoting of each part.
fn split_qualified(token: &str) -> Option<Vec<String>> {
    let mut parts = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    for c in token.chars() {
        match quote {
            Some(close) if c == close => quote = None,
            Some(_) => current.push(c),
            None => match c {
                '`' | '"' | '\'' => quote = Some(c),
                '[' => quote = Some(']'),
                '.' => parts.push(core::mem::take(&mut current)),
                _ => current.push(c),
            },
        }
    }
    parts.push(current);
    let parts: Vec<String> = parts.into_iter().map(|p| p.trim().to_string()).collect();
    if parts.iter().any(String::is_empty) {
        return None;
    }
    Some(parts)
}
