//! Stage prompt templates and `{placeholder}` substitution.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("missing prompt variable `{0}`")]
    MissingVariable(String),
    #[error("unknown stage `{0}`")]
    UnknownStage(String),
    #[error("placeholder `{name}` is not available to stage {stage}")]
    UnexpectedPlaceholder { stage: StageKind, name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Pruning,
    Linking,
    GenerationWithLinking,
    GenerationWithoutLinking,
    Correction,
    SelectionQueryOnly,
    SelectionWithResults,
}

impl StageKind {
    pub const ALL: [StageKind; 7] = [
        StageKind::Pruning,
        StageKind::Linking,
        StageKind::GenerationWithLinking,
        StageKind::GenerationWithoutLinking,
        StageKind::Correction,
        StageKind::SelectionQueryOnly,
        StageKind::SelectionWithResults,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageKind::Pruning => "pruning",
            StageKind::Linking => "linking",
            StageKind::GenerationWithLinking => "generation_with_linking",
            StageKind::GenerationWithoutLinking => "generation_without_linking",
            StageKind::Correction => "correction",
            StageKind::SelectionQueryOnly => "selection_query_only",
            StageKind::SelectionWithResults => "selection_with_results",
        }
    }

    /// Variables the pipeline supplies when rendering this stage.
    pub fn variables(self) -> &'static [&'static str] {
        match self {
            StageKind::Pruning => &["database_name", "database_schema", "question", "hint", "tables"],
            StageKind::Linking => &["database_name", "schema", "question", "hint"],
            StageKind::GenerationWithLinking => {
                &["database_name", "database_schema", "schema_linking", "question", "hint"]
            }
            StageKind::GenerationWithoutLinking => &["database_name", "database_schema", "question", "hint"],
            StageKind::Correction => &["schema", "question", "hint", "prev_ans", "errorMsg"],
            StageKind::SelectionQueryOnly | StageKind::SelectionWithResults => {
                &["database_name", "database_schema", "question", "hint", "queries"]
            }
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageKind {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| PromptError::UnknownStage(s.to_string()))
    }
}

const PRUNING_SYSTEM: &str = include_str!("../templates/pruning.system.txt");
const PRUNING_USER: &str = include_str!("../templates/pruning.user.txt");
const LINKING_SYSTEM: &str = include_str!("../templates/linking.system.txt");
const LINKING_USER: &str = include_str!("../templates/linking.user.txt");
const GENERATION_SYSTEM: &str = include_str!("../templates/generation.system.txt");
const GENERATION_WITH_LINKING_USER: &str = include_str!("../templates/generation_with_linking.user.txt");
const GENERATION_WITHOUT_LINKING_USER: &str = include_str!("../templates/generation_without_linking.user.txt");
const CORRECTION_SYSTEM: &str = include_str!("../templates/correction.system.txt");
const CORRECTION_USER: &str = include_str!("../templates/correction.user.txt");
const SELECTION_SYSTEM: &str = include_str!("../templates/selection.system.txt");
const SELECTION_QUERY_ONLY_USER: &str = include_str!("../templates/selection_query_only.user.txt");
const SELECTION_WITH_RESULTS_USER: &str = include_str!("../templates/selection_with_results.user.txt");

fn builtin_text(stage: StageKind) -> (&'static str, &'static str) {
    match stage {
        StageKind::Pruning => (PRUNING_SYSTEM, PRUNING_USER),
        StageKind::Linking => (LINKING_SYSTEM, LINKING_USER),
        StageKind::GenerationWithLinking => (GENERATION_SYSTEM, GENERATION_WITH_LINKING_USER),
        StageKind::GenerationWithoutLinking => (GENERATION_SYSTEM, GENERATION_WITHOUT_LINKING_USER),
        StageKind::Correction => (CORRECTION_SYSTEM, CORRECTION_USER),
        StageKind::SelectionQueryOnly => (SELECTION_SYSTEM, SELECTION_QUERY_ONLY_USER),
        StageKind::SelectionWithResults => (SELECTION_SYSTEM, SELECTION_WITH_RESULTS_USER),
    }
}

/// A `{name}` occurrence in template text.
struct Placeholder<'a> {
    start: usize,
    end: usize,
    name: &'a str,
}

fn placeholders(text: &str) -> Vec<Placeholder<'_>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let start = i;
            let mut j = i + 1;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            let named = j > i + 1 && !bytes[i + 1].is_ascii_digit();
            if named && j < bytes.len() && bytes[j] == b'}' {
                out.push(Placeholder {
                    start,
                    end: j + 1,
                    name: &text[start + 1..j],
                });
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    out
}

fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub stage: StageKind,
    pub system_text: String,
    pub user_text: String,
    pub placeholders: BTreeSet<String>,
}

impl PromptTemplate {
    /// Builds a template, rejecting placeholders the stage cannot supply.
    pub fn new(
        stage: StageKind,
        system_text: impl Into<String>,
        user_text: impl Into<String>,
    ) -> Result<Self, PromptError> {
        let system_text = system_text.into();
        let user_text = user_text.into();
        let mut names = BTreeSet::new();
        for p in placeholders(&system_text).into_iter().chain(placeholders(&user_text)) {
            if !stage.variables().contains(&p.name) {
                return Err(PromptError::UnexpectedPlaceholder {
                    stage,
                    name: p.name.to_string(),
                });
            }
            names.insert(p.name.to_string());
        }
        Ok(Self {
            stage,
            system_text,
            user_text,
            placeholders: names,
        })
    }

    pub fn builtin(stage: StageKind) -> Self {
        let (system, user) = builtin_text(stage);
        Self::new(stage, system, user).expect("embedded templates use known placeholders")
    }

    /// Words of system plus user text with placeholders removed.
    pub fn static_word_count(&self) -> usize {
        [&self.system_text, &self.user_text]
            .iter()
            .map(|t| word_count(&strip_placeholders(t)))
            .sum()
    }

    /// Substitutes every placeholder in one pass; substituted text is never
    /// rescanned. An empty or blank `hint` renders as `None`.
    pub fn render(&self, vars: &BTreeMap<&str, &str>) -> Result<RenderedPrompt, PromptError> {
        let system = substitute(&self.system_text, vars)?;
        let user = substitute(&self.user_text, vars)?;
        let word_count = word_count(&system) + word_count(&user);
        Ok(RenderedPrompt {
            stage: self.stage,
            system,
            user,
            word_count,
        })
    }
}

fn strip_placeholders(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for p in placeholders(text) {
        out.push_str(&text[last..p.start]);
        out.push(' ');
        last = p.end;
    }
    out.push_str(&text[last..]);
    out
}

fn substitute(text: &str, vars: &BTreeMap<&str, &str>) -> Result<String, PromptError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for p in placeholders(text) {
        out.push_str(&text[last..p.start]);
        let value = vars
            .get(p.name)
            .ok_or_else(|| PromptError::MissingVariable(p.name.to_string()))?;
        if p.name == "hint" && value.trim().is_empty() {
            out.push_str("None");
        } else {
            out.push_str(value);
        }
        last = p.end;
    }
    out.push_str(&text[last..]);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub stage: StageKind,
    pub system: String,
    pub user: String,
    pub word_count: usize,
}

/// One template per stage; starts from the embedded set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    templates: Vec<PromptTemplate>,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptSet {
    pub fn builtin() -> Self {
        Self {
            templates: StageKind::ALL.into_iter().map(PromptTemplate::builtin).collect(),
        }
    }

    pub fn get(&self, stage: StageKind) -> &PromptTemplate {
        self.templates
            .iter()
            .find(|t| t.stage == stage)
            .expect("every stage has a template")
    }

    pub fn replace(&mut self, template: PromptTemplate) {
        if let Some(slot) = self.templates.iter_mut().find(|t| t.stage == template.stage) {
            *slot = template;
        }
    }

    pub fn render(&self, stage: StageKind, vars: &BTreeMap<&str, &str>) -> Result<RenderedPrompt, PromptError> {
        self.get(stage).render(vars)
    }
}

/// Renders a stage with the embedded templates.
pub fn render(stage: StageKind, vars: &BTreeMap<&str, &str>) -> Result<RenderedPrompt, PromptError> {
    PromptTemplate::builtin(stage).render(vars)
}

pub fn static_word_count(stage: StageKind) -> usize {
    PromptTemplate::builtin(stage).static_word_count()
}
