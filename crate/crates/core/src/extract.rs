//! Salvaging structured results from unconstrained model output.
//!
//! Small models rarely honour output-format instructions, so nothing here
//! demands a particular shape. Table and column names are found by lexical
//! matching against the schema; answers and selection indices by scanning for
//! marker phrases; SQL by fenced blocks first and bare statements second.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::schema::DatabaseSchema;
use crate::text::{char_after, char_before, chars_eq_ci, find_words_ci, is_ident_char, match_at};

/// Marker phrases used by [`extract_answer`] when none are configured.
pub const DEFAULT_ANSWER_PATTERNS: [&str; 2] = ["answer is", "Answer:"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionKind {
    Tables,
    Columns,
    Sql,
    Answer,
    Index,
}

/// What one extraction pulled out of a model reply, for tracing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionOutcome {
    pub kind: ExtractionKind,
    pub values: Vec<String>,
    /// Byte range in the source text of the first match.
    pub matched_span: Option<Range<usize>>,
}

impl ExtractionOutcome {
    pub fn tables(text: &str, schema: &DatabaseSchema) -> Self {
        let hits = table_hits(text, schema);
        Self {
            kind: ExtractionKind::Tables,
            matched_span: hits.iter().map(|(_, r)| r.clone()).min_by_key(|r| r.start),
            values: dedup_in_schema_order(schema, hits.into_iter().map(|(t, _)| t)),
        }
    }

    pub fn columns(text: &str, schema: &DatabaseSchema) -> Self {
        let hits = column_hits(text, schema);
        let span = hits.iter().map(|(_, r)| r.clone()).min_by_key(|r| r.start);
        Self {
            kind: ExtractionKind::Columns,
            values: order_pairs(schema, hits.into_iter().map(|(p, _)| p))
                .into_iter()
                .map(|(t, c)| alloc::format!("{t}.{c}"))
                .collect(),
            matched_span: span,
        }
    }

    pub fn sql(text: &str) -> Self {
        let found = sql_span(text);
        Self {
            kind: ExtractionKind::Sql,
            values: found.iter().map(|r| clean_sql(&text[r.clone()]).to_string()).collect(),
            matched_span: found,
        }
    }

    pub fn answer<S: AsRef<str>>(text: &str, patterns: &[S]) -> Self {
        let found = answer_span(text, patterns);
        Self {
            kind: ExtractionKind::Answer,
            values: found.iter().map(|r| text[r.clone()].to_string()).collect(),
            matched_span: found,
        }
    }

    pub fn index(text: &str, max_index: usize) -> Self {
        let found = index_span(text, max_index);
        Self {
            kind: ExtractionKind::Index,
            values: found.iter().map(|(n, _)| n.to_string()).collect(),
            matched_span: found.map(|(_, r)| r),
        }
    }
}

/// Schema tables named anywhere in `text`, deduplicated, in schema order.
pub fn extract_tables(text: &str, schema: &DatabaseSchema) -> Vec<String> {
    dedup_in_schema_order(schema, table_hits(text, schema).into_iter().map(|(t, _)| t))
}

/// `(table, column)` pairs mentioned as `table.column` or as an unambiguous bare column.
pub fn extract_columns(text: &str, schema: &DatabaseSchema) -> Vec<(String, String)> {
    order_pairs(schema, column_hits(text, schema).into_iter().map(|(p, _)| p))
}

/// The first fenced SQL block, else the first bare `SELECT`/`WITH` statement.
pub fn extract_sql(text: &str) -> Option<String> {
    sql_span(text).map(|r| clean_sql(&text[r]).to_string())
}

/// Text after the leftmost marker, trimmed of surrounding punctuation.
pub fn extract_answer<S: AsRef<str>>(text: &str, patterns: &[S]) -> Option<String> {
    answer_span(text, patterns).map(|r| text[r].to_string())
}

/// A 1-based candidate index in `1..=max_index`.
pub fn extract_index(text: &str, max_index: usize) -> Option<usize> {
    index_span(text, max_index).map(|(n, _)| n)
}

fn table_hits<'s>(text: &str, schema: &'s DatabaseSchema) -> Vec<(&'s str, Range<usize>)> {
    let mut hits = Vec::new();
    for table in schema.tables() {
        if let Some(first) = find_words_ci(text, &table.name).into_iter().next() {
            hits.push((table.name.as_str(), first));
        }
    }
    hits
}

fn dedup_in_schema_order<'s>(schema: &'s DatabaseSchema, found: impl Iterator<Item = &'s str>) -> Vec<String> {
    let found: Vec<&str> = found.collect();
    schema
        .table_names()
        .filter(|name| found.contains(name))
        .map(ToString::to_string)
        .collect()
}

type ColumnHit<'s> = ((&'s str, &'s str), Range<usize>);

fn column_hits<'s>(text: &str, schema: &'s DatabaseSchema) -> Vec<ColumnHit<'s>> {
    let mut hits = Vec::new();
    for table in schema.tables() {
        // qualified mentions: table.column with optional quoting on either side
        for occurrence in find_words_ci(text, &table.name) {
            let Some(col_start) = after_qualifier_dot(text, occurrence.end) else {
                continue;
            };
            let best = table
                .columns
                .iter()
                .filter_map(|c| {
                    let end = match_at(text, col_start, &c.name)?;
                    let range = col_start..end;
                    crate::text::bounded(text, &range).then_some((c, end))
                })
                .max_by_key(|(_, end)| *end);
            if let Some((column, end)) = best {
                hits.push(((table.name.as_str(), column.name.as_str()), occurrence.start..end));
            }
        }
        // bare mentions of a column no other table defines
        for column in &table.columns {
            let Some(resolved) = schema.resolve_identifier(&column.name) else {
                continue;
            };
            if resolved.column.is_none() {
                continue;
            }
            if let Some(first) = find_words_ci(text, &column.name).into_iter().next() {
                hits.push(((table.name.as_str(), column.name.as_str()), first));
            }
        }
    }
    hits
}

/// Position of the column part after `table` ends at `at`, e.g. in `"t"."c"` or `t.c`.
fn after_qualifier_dot(text: &str, mut at: usize) -> Option<usize> {
    if let Some(c @ ('`' | '"' | ']')) = char_after(text, at) {
        at += c.len_utf8();
    }
    if char_after(text, at) != Some('.') {
        return None;
    }
    at += 1;
    if let Some(c @ ('`' | '"' | '[')) = char_after(text, at) {
        at += c.len_utf8();
    }
    Some(at)
}

fn order_pairs<'s>(
    schema: &'s DatabaseSchema,
    found: impl Iterator<Item = (&'s str, &'s str)>,
) -> Vec<(String, String)> {
    let found: Vec<(&str, &str)> = found.collect();
    let mut out = Vec::new();
    for table in schema.tables() {
        for column in &table.columns {
            if found.contains(&(table.name.as_str(), column.name.as_str())) {
                out.push((table.name.clone(), column.name.clone()));
            }
        }
    }
    out
}

const SQL_CONTINUATION: [&str; 24] = [
    "select",
    "from",
    "where",
    "join",
    "inner",
    "left",
    "right",
    "full",
    "cross",
    "on",
    "and",
    "or",
    "group",
    "order",
    "having",
    "limit",
    "offset",
    "union",
    "intersect",
    "except",
    "as",
    "case",
    "when",
    "with",
];

fn clean_sql(s: &str) -> &str {
    s.trim().trim_end_matches(|c: char| c == ';' || c.is_whitespace())
}

fn sql_span(text: &str) -> Option<Range<usize>> {
    if let Some(body) = fenced_sql(text) {
        if !clean_sql(&text[body.clone()]).is_empty() {
            return Some(trimmed(text, body));
        }
    }
    statement_span(text)
}

/// Narrows `range` so that `text[range]` equals `clean_sql` of it.
fn trimmed(text: &str, range: Range<usize>) -> Range<usize> {
    let slice = &text[range.clone()];
    let cleaned = clean_sql(slice);
    let start = range.start + (slice.len() - slice.trim_start().len());
    start..start + cleaned.len()
}

struct Fence {
    info: Range<usize>,
    body: Range<usize>,
}

fn fences(text: &str) -> Vec<Fence> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(off) = text[pos..].find("```") {
        let open = pos + off + 3;
        let line_end = text[open..].find('\n').map_or(text.len(), |i| open + i);
        // inline fence: ```SELECT 1```
        if let Some(close) = text[open..line_end].find("```") {
            let inline = &text[open..open + close];
            let tag = inline.len() - inline.trim_start_matches(|c: char| c.is_ascii_alphabetic()).len();
            let info = if tag > 0 && inline[tag..].starts_with(char::is_whitespace) {
                open..open + tag
            } else {
                open..open
            };
            out.push(Fence {
                info: info.clone(),
                body: info.end..open + close,
            });
            pos = open + close + 3;
            continue;
        }
        let body_start = (line_end + 1).min(text.len());
        let (body_end, next) = match text[body_start..].find("```") {
            Some(i) => (body_start + i, body_start + i + 3),
            None => (text.len(), text.len()),
        };
        out.push(Fence {
            info: open..line_end,
            body: body_start..body_end,
        });
        pos = next;
        if pos >= text.len() {
            break;
        }
    }
    out
}

fn fenced_sql(text: &str) -> Option<Range<usize>> {
    let fences = fences(text);
    let tagged = fences.iter().find(|f| {
        let info = text[f.info.clone()].trim();
        info.len() >= 3 && info.is_char_boundary(3) && info[..3].eq_ignore_ascii_case("sql")
    });
    if let Some(f) = tagged {
        return Some(f.body.clone());
    }
    fences
        .iter()
        .find(|f| {
            text[f.info.clone()].trim().is_empty() && starts_with_query_keyword(text[f.body.clone()].trim_start())
        })
        .map(|f| f.body.clone())
}

fn starts_with_query_keyword(s: &str) -> bool {
    keyword_at(s, 0, "select") || keyword_at(s, 0, "with")
}

fn keyword_at(text: &str, at: usize, keyword: &str) -> bool {
    match match_at(text, at, keyword) {
        Some(end) => {
            !char_before(text, at).is_some_and(is_ident_char) && !char_after(text, end).is_some_and(is_ident_char)
        }
        None => false,
    }
}

fn statement_span(text: &str) -> Option<Range<usize>> {
    let leading = text.len() - text.trim_start().len();
    for (i, c) in text.char_indices() {
        if !(chars_eq_ci(c, 's') || chars_eq_ci(c, 'w')) {
            continue;
        }
        let plausible = if keyword_at(text, i, "select") {
            let end = statement_end(text, i);
            i == leading || &text[i..i + 6] == "SELECT" || !find_words_ci(&text[i + 6..end], "from").is_empty()
        } else if keyword_at(text, i, "with") {
            i == leading || looks_like_cte(&text[i + 4..])
        } else {
            false
        };
        if plausible {
            let end = statement_end(text, i);
            let range = trimmed(text, i..end);
            if !range.is_empty() {
                return Some(range);
            }
        }
    }
    None
}

/// `WITH [RECURSIVE] name [(cols)] AS (`
fn looks_like_cte(rest: &str) -> bool {
    let mut s = rest.trim_start();
    if s.len() >= 9 && s.is_char_boundary(9) && s[..9].eq_ignore_ascii_case("recursive") {
        s = s[9..].trim_start();
    }
    let name_len = match s.chars().next() {
        Some(q @ ('`' | '"' | '[')) => {
            let close = if q == '[' { ']' } else { q };
            match s[1..].find(close) {
                Some(i) => i + 2,
                None => return false,
            }
        }
        Some(c) if is_ident_char(c) => s.find(|c: char| !is_ident_char(c)).unwrap_or(s.len()),
        _ => return false,
    };
    s = s[name_len..].trim_start();
    if s.starts_with('(') {
        match s.find(')') {
            Some(i) => s = s[i + 1..].trim_start(),
            None => return false,
        }
    }
    if s.len() < 2 || !s.is_char_boundary(2) || !s[..2].eq_ignore_ascii_case("as") {
        return false;
    }
    s[2..].trim_start().starts_with('(')
}

/// End of the statement starting at `start`: a `;` or code fence outside
/// string literals, a blank line followed by prose, or the end of the text.
fn statement_end(text: &str, start: usize) -> usize {
    let mut quote: Option<char> = None;
    for (off, c) in text[start..].char_indices() {
        let at = start + off;
        if c == '`' && text[at..].starts_with("```") {
            return at;
        }
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None => match c {
                '\'' | '"' | '`' => quote = Some(c),
                ';' => return at,
                '\n' => {
                    let rest = &text[at + 1..];
                    let line = rest.split('\n').next().unwrap_or("");
                    if line.trim().is_empty() && !continues_sql(rest[line.len()..].trim_start()) {
                        return at;
                    }
                }
                _ => {}
            },
        }
    }
    text.len()
}

fn continues_sql(next: &str) -> bool {
    if next.is_empty() {
        return false;
    }
    if next.starts_with(['(', ')', ',']) {
        return true;
    }
    SQL_CONTINUATION.iter().any(|kw| keyword_at(next, 0, kw))
}

fn answer_span<S: AsRef<str>>(text: &str, patterns: &[S]) -> Option<Range<usize>> {
    let mut occurrences: Vec<(usize, usize, usize)> = Vec::new();
    for (rank, pattern) in patterns.iter().enumerate() {
        let pattern = pattern.as_ref();
        if pattern.is_empty() {
            continue;
        }
        for (i, _) in text.char_indices() {
            if let Some(end) = match_at(text, i, pattern) {
                occurrences.push((i, rank, end));
            }
        }
    }
    occurrences.sort_unstable();
    occurrences.into_iter().find_map(|(_, _, end)| answer_after(text, end))
}

fn is_answer_trim(c: char) -> bool {
    c.is_whitespace() || matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '"' | '\'' | '`' | '*' | '-')
}

fn answer_after(text: &str, marker_end: usize) -> Option<Range<usize>> {
    let rest = &text[marker_end..];
    let skipped = rest.len() - rest.trim_start_matches(is_answer_trim).len();
    let start = marker_end + skipped;
    let line = text[start..].split('\n').next().unwrap_or("");
    let value = line.trim_end_matches(is_answer_trim);
    (!value.is_empty()).then(|| start..start + value.len())
}

fn index_span(text: &str, max_index: usize) -> Option<(usize, Range<usize>)> {
    let in_range = |n: usize| (1..=max_index).contains(&n);
    for marker in find_words_ci(text, "index") {
        let rest = &text[marker.end..];
        let after_ws = rest.trim_start_matches([' ', '\t', '*']);
        if !after_ws.starts_with(':') {
            continue;
        }
        let after_colon = &after_ws[1..];
        let digits_at = marker.end
            + (rest.len() - after_colon.len())
            + (after_colon.len() - after_colon.trim_start_matches([' ', '\t', '*', '#']).len());
        if let Some((n, range)) = integer_at(text, digits_at) {
            if in_range(n) {
                return Some((n, range));
            }
        }
        break;
    }
    standalone_integers(text).into_iter().find(|(n, _)| in_range(*n))
}

fn integer_at(text: &str, at: usize) -> Option<(usize, Range<usize>)> {
    let len = text[at..]
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(text.len() - at);
    if len == 0 {
        return None;
    }
    let n = text[at..at + len].parse().ok()?;
    Some((n, at..at + len))
}

fn standalone_integers(text: &str) -> Vec<(usize, Range<usize>)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if !bytes[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let before_ok = !char_before(text, start).is_some_and(|c| is_ident_char(c) || c == '.');
        let after = char_after(text, i);
        let decimal = after == Some('.') && text[i + 1..].starts_with(|c: char| c.is_ascii_digit());
        let after_ok = !after.is_some_and(is_ident_char) && !decimal;
        if before_ok && after_ok {
            if let Ok(n) = text[start..i].parse() {
                out.push((n, start..i));
            }
        }
    }
    out
}
