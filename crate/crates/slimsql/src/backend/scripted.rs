//! Deterministic canned-reply backend for tests, demos and offline runs.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use slimsql_core::{ModelRole, PathKind, StageKind};

use super::{Backend, BackendError, BackendReply, Completion, GenerationRequest};

/// One matching rule. Unset filters match anything; the first matching rule wins.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScriptRule {
    pub role: Option<ModelRole>,
    pub stage: Option<StageKind>,
    pub question: Option<String>,
    pub path: Option<PathKind>,
    /// Substring that must occur in the rendered user prompt.
    pub user_contains: Option<String>,
    /// Reply lists served in call order; the last list repeats once exhausted.
    /// A list shorter than the requested count is cycled.
    pub replies: Vec<Vec<String>>,
    /// When set, matching calls fail with this message instead.
    pub fail: Option<String>,
}

impl ScriptRule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn role(mut self, role: ModelRole) -> Self {
        self.role = Some(role);
        self
    }

    pub fn stage(mut self, stage: StageKind) -> Self {
        self.stage = Some(stage);
        self
    }

    pub fn question(mut self, question_id: impl Into<String>) -> Self {
        self.question = Some(question_id.into());
        self
    }

    pub fn path(mut self, path: PathKind) -> Self {
        self.path = Some(path);
        self
    }

    pub fn user_contains(mut self, needle: impl Into<String>) -> Self {
        self.user_contains = Some(needle.into());
        self
    }

    pub fn reply<I, S>(mut self, texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.replies.push(texts.into_iter().map(Into::into).collect());
        self
    }

    pub fn fail(mut self, message: impl Into<String>) -> Self {
        self.fail = Some(message.into());
        self
    }

    fn matches(&self, request: &GenerationRequest) -> bool {
        self.role.is_none_or(|r| r == request.role)
            && self.stage.is_none_or(|s| s == request.stage)
            && self
                .question
                .as_ref()
                .is_none_or(|q| request.tag.question_id.as_ref() == Some(q))
            && self.path.is_none_or(|p| request.tag.path == Some(p))
            && self
                .user_contains
                .as_ref()
                .is_none_or(|n| request.user.contains(n.as_str()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Script {
    pub rules: Vec<ScriptRule>,
}

impl Script {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rule(mut self, rule: ScriptRule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::InvalidConfig(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| BackendError::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

type OrdinalKey = (usize, Option<String>, StageKind, Option<PathKind>);

/// Serves replies from a [`Script`].
///
/// Call ordinals are tracked per rule, question, stage and path, so the
/// reply a question receives does not depend on how questions interleave
/// across worker threads.
#[derive(Debug)]
pub struct ScriptedBackend {
    script: Script,
    ordinals: Mutex<HashMap<OrdinalKey, usize>>,
}

impl ScriptedBackend {
    pub fn new(script: Script) -> Result<Self, BackendError> {
        for (i, rule) in script.rules.iter().enumerate() {
            if rule.fail.is_none() && (rule.replies.is_empty() || rule.replies.iter().any(Vec::is_empty)) {
                return Err(BackendError::InvalidConfig(format!(
                    "script rule {i} has an empty reply list"
                )));
            }
        }
        Ok(Self {
            script,
            ordinals: Mutex::new(HashMap::new()),
        })
    }
}

impl Backend for ScriptedBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<BackendReply, BackendError> {
        let (index, rule) = self
            .script
            .rules
            .iter()
            .enumerate()
            .find(|(_, r)| r.matches(request))
            .ok_or_else(|| {
                BackendError::Unavailable(format!(
                    "no scripted reply for role {} stage {} question {:?} path {:?}",
                    request.role.as_str(),
                    request.stage,
                    request.tag.question_id,
                    request.tag.path.map(PathKind::as_str),
                ))
            })?;
        if let Some(message) = &rule.fail {
            return Err(BackendError::Unavailable(message.clone()));
        }
        let ordinal = {
            let mut ordinals = self.ordinals.lock().unwrap_or_else(|e| e.into_inner());
            let slot = ordinals
                .entry((index, request.tag.question_id.clone(), request.stage, request.tag.path))
                .or_insert(0);
            *slot += 1;
            *slot - 1
        };
        let list = &rule.replies[ordinal.min(rule.replies.len() - 1)];
        let wanted = request.sampling.expected_completions();
        let completions = list.iter().cycle().take(wanted).map(Completion::stop).collect();
        Ok(BackendReply {
            completions,
            attempts: 1,
        })
    }
}
