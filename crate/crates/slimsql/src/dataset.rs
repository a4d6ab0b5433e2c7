//! Benchmark question files in BIRD and Spider layouts.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::pipeline::QuestionTask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    /// Entries with `question_id`, `db_id`, `question`, `evidence`, `SQL`, `difficulty`.
    Bird,
    /// Entries with `db_id`, `question`, `query`; ids are entry indices.
    Spider,
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetFormat::Bird => "bird",
            DatasetFormat::Spider => "spider",
        })
    }
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bird" => Ok(DatasetFormat::Bird),
            "spider" => Ok(DatasetFormat::Spider),
            other => Err(format!("unknown dataset format `{other}` (expected bird or spider)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetExample {
    pub question_id: String,
    pub db_id: String,
    pub question: String,
    pub hint: Option<String>,
    pub gold_sql: String,
    pub difficulty: Option<String>,
}

impl DatasetExample {
    pub fn task(&self) -> QuestionTask {
        QuestionTask {
            question_id: self.question_id.clone(),
            db_id: self.db_id.clone(),
            question: self.question.clone(),
            hint: self.hint.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("dataset is not valid JSON: {0}")]
    Json(String),
    #[error("dataset must be a JSON array of entries")]
    NotAnArray,
    #[error("malformed dataset entry {index}: field `{field}` {reason}")]
    Malformed {
        index: usize,
        field: &'static str,
        reason: &'static str,
    },
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Vec<DatasetExample>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, format)
}

pub fn parse_dataset(text: &str, format: DatasetFormat) -> Result<Vec<DatasetExample>, DatasetError> {
    let json: Json = serde_json::from_str(text).map_err(|e| DatasetError::Json(e.to_string()))?;
    let entries = json.as_array().ok_or(DatasetError::NotAnArray)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(entries.len());
    for (index, entry) in entries.iter().enumerate() {
        let malformed = |field, reason| DatasetError::Malformed { index, field, reason };
        let obj = entry.as_object().ok_or(malformed("<entry>", "is not an object"))?;
        let required = |field: &'static str| -> Result<String, DatasetError> {
            match obj.get(field) {
                None | Some(Json::Null) => Err(malformed(field, "is missing")),
                Some(Json::String(s)) if s.trim().is_empty() => Err(malformed(field, "is empty")),
                Some(Json::String(s)) => Ok(s.clone()),
                Some(_) => Err(malformed(field, "is not a string")),
            }
        };
        let optional = |field: &'static str| -> Result<Option<String>, DatasetError> {
            match obj.get(field) {
                None | Some(Json::Null) => Ok(None),
                Some(Json::String(s)) if s.trim().is_empty() => Ok(None),
                Some(Json::String(s)) => Ok(Some(s.clone())),
                Some(_) => Err(malformed(field, "is not a string")),
            }
        };
        let example = match format {
            DatasetFormat::Bird => {
                let question_id = match obj.get("question_id") {
                    Some(Json::Number(n)) => n.to_string(),
                    Some(Json::String(s)) if !s.trim().is_empty() => s.clone(),
                    None | Some(Json::Null) => index.to_string(),
                    Some(_) => return Err(malformed("question_id", "is not a number or string")),
                };
                DatasetExample {
                    question_id,
                    db_id: required("db_id")?,
                    question: required("question")?,
                    hint: optional("evidence")?,
                    gold_sql: required("SQL")?,
                    difficulty: optional("difficulty")?,
                }
            }
            DatasetFormat::Spider => DatasetExample {
                question_id: index.to_string(),
                db_id: required("db_id")?,
                question: required("question")?,
                hint: None,
                gold_sql: required("query")?,
                difficulty: None,
            },
        };
        if !seen.insert(example.question_id.clone()) {
            return Err(malformed("question_id", "duplicates an earlier entry"));
        }
        out.push(example);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bird_entries_map_evidence_to_hint() {
        let text = r#"[
            {"question_id": 0, "db_id": "a", "question": "q0", "evidence": "e0", "SQL": "SELECT 1", "difficulty": "simple"},
            {"question_id": 1, "db_id": "a", "question": "q1", "evidence": "", "SQL": "SELECT 2", "difficulty": "moderate"},
            {"question_id": "x", "db_id": "b", "question": "q2", "SQL": "SELECT 3"}
        ]"#;
        let got = parse_dataset(text, DatasetFormat::Bird).unwrap();
        assert_eq!(got.len(), 3);
        assert_eq!(got[0].hint.as_deref(), Some("e0"));
        assert_eq!(got[1].hint, None);
        assert_eq!(got[2].question_id, "x");
        assert_eq!(got[2].difficulty, None);
    }

    #[test]
    fn spider_entries_have_no_hint() {
        let text = r#"[{"db_id": "a", "question": "q", "query": "SELECT 1"}]"#;
        let got = parse_dataset(text, DatasetFormat::Spider).unwrap();
        assert_eq!(got[0].question_id, "0");
        assert_eq!(got[0].hint, None);
        assert_eq!(got[0].gold_sql, "SELECT 1");
    }

    #[test]
    fn malformed_entries_name_index_and_field() {
        let text = r#"[{"db_id": "a", "question": "q", "query": "SELECT 1"}, {"db_id": "a", "query": "SELECT 1"}]"#;
        match parse_dataset(text, DatasetFormat::Spider) {
            Err(DatasetError::Malformed { index, field, .. }) => assert_eq!((index, field), (1, "question")),
            other => panic!("unexpected {other:?}"),
        }
        let dup = r#"[{"question_id": 1, "db_id": "a", "question": "q", "SQL": "S"},
                      {"question_id": 1, "db_id": "a", "question": "q", "SQL": "S"}]"#;
        assert!(matches!(
            parse_dataset(dup, DatasetFormat::Bird),
            Err(DatasetError::Malformed {
                index: 1,
                field: "question_id",
                ..
            })
        ));
        assert!(matches!(
            parse_dataset("{}", DatasetFormat::Bird),
            Err(DatasetError::NotAnArray)
        ));
        assert_eq!("BIRD".parse::<DatasetFormat>().unwrap(), DatasetFormat::Bird);
    }
}
