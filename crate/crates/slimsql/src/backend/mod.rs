//! Text-generation backends and role-based routing.
//!
//! Every model call goes through [`ModelRouter`], which resolves the request's
//! [`ModelRole`] to a bound backend and normalises the number of completions.
//! Binding both roles to one backend gives the single-model setup; binding a
//! chat model and an SQL model separately gives the two-model setup.

mod http;
mod scripted;

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use slimsql_core::{ModelRole, PathKind, SamplingParams, StageKind};
use thiserror::Error;

pub use http::{HttpBackend, HttpConfig};
pub use scripted::{Script, ScriptRule, ScriptedBackend};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend rejected request{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Rejected { status: Option<u16>, message: String },
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
}

/// Routing context the pipeline attaches to each request.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestTag {
    pub question_id: Option<String>,
    pub path: Option<PathKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub role: ModelRole,
    pub stage: StageKind,
    pub tag: RequestTag,
    pub system: String,
    pub user: String,
    pub sampling: SamplingParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub finish_reason: FinishReason,
    pub latency: Duration,
}

impl Completion {
    pub fn stop(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            finish_reason: FinishReason::Stop,
            latency: Duration::ZERO,
        }
    }
}

/// Completions returned by one backend call plus the transport attempts it took.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendReply {
    pub completions: Vec<Completion>,
    pub attempts: u32,
}

pub trait Backend: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<BackendReply, BackendError>;
}

impl<F> Backend for F
where
    F: Fn(&GenerationRequest) -> Result<BackendReply, BackendError> + Send + Sync,
{
    fn generate(&self, request: &GenerationRequest) -> Result<BackendReply, BackendError> {
        self(request)
    }
}

/// Role-to-backend bindings. Cheap to clone; handles are shared.
#[derive(Clone, Default)]
pub struct ModelRouter {
    chat: Option<Arc<dyn Backend>>,
    sql: Option<Arc<dyn Backend>>,
}

impl std::fmt::Debug for ModelRouter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelRouter")
            .field("chat", &self.chat.is_some())
            .field("sql", &self.sql.is_some())
            .finish()
    }
}

impl ModelRouter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Both roles served by one backend.
    pub fn unified(backend: Arc<dyn Backend>) -> Self {
        Self {
            chat: Some(backend.clone()),
            sql: Some(backend),
        }
    }

    /// Binds `role`, replacing any previous binding.
    pub fn bind(&mut self, role: ModelRole, backend: Arc<dyn Backend>) -> &mut Self {
        match role {
            ModelRole::Chat => self.chat = Some(backend),
            ModelRole::Sql => self.sql = Some(backend),
        }
        self
    }

    pub fn is_bound(&self, role: ModelRole) -> bool {
        match role {
            ModelRole::Chat => self.chat.is_some(),
            ModelRole::Sql => self.sql.is_some(),
        }
    }

    /// Whether the two roles share one backend handle.
    pub fn is_unified(&self) -> bool {
        match (&self.chat, &self.sql) {
            (Some(a), Some(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }

    /// Exactly one completion for greedy requests and exactly
    /// `num_candidates` otherwise; short replies are topped up with
    /// single-completion calls.
    pub fn generate(&self, request: &GenerationRequest) -> Result<BackendReply, BackendError> {
        if request.system.trim().is_empty() || request.user.trim().is_empty() {
            return Err(BackendError::InvalidConfig(
                "system and user prompts must be non-empty".into(),
            ));
        }
        request.sampling.validate().map_err(BackendError::InvalidConfig)?;
        let backend = match request.role {
            ModelRole::Chat => self.chat.as_ref(),
            ModelRole::Sql => self.sql.as_ref(),
        }
        .ok_or_else(|| BackendError::Unavailable(format!("no backend bound for role {}", request.role.as_str())))?;

        let wanted = request.sampling.expected_completions();
        let mut reply = backend.generate(request)?;
        if reply.completions.len() < wanted && !request.sampling.greedy {
            let single = GenerationRequest {
                sampling: SamplingParams {
                    num_candidates: 1,
                    ..request.sampling.clone()
                },
                ..request.clone()
            };
            // bounded: a backend that keeps returning nothing cannot loop forever
            for _ in 0..wanted * 2 {
                if reply.completions.len() >= wanted {
                    break;
                }
                let extra = backend.generate(&single)?;
                reply.attempts += extra.attempts;
                reply.completions.extend(extra.completions);
            }
        }
        if reply.completions.is_empty() {
            return Err(BackendError::Rejected {
                status: None,
                message: "backend returned no completions".into(),
            });
        }
        reply.completions.truncate(wanted);
        Ok(reply)
    }
}
