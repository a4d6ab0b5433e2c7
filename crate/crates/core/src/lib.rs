#![no_std]

//! Allocation-only building blocks for a small-model text-to-SQL pipeline.
//!
//! Everything here is pure computation over in-memory values: the schema
//! model and its DDL rendering, extraction of structured results from
//! free-form model output, prompt templates, result-set comparison, vote
//! aggregation for candidate selection, and benchmark metrics. Database
//! access, model backends and file formats live in the `slimsql` crate.

extern crate alloc;

pub mod candidate;
pub mod config;
pub mod extract;
pub mod metrics;
pub mod prompts;
pub mod results;
pub mod schema;
pub mod vote;

mod text;

pub use text::normalize_whitespace;

pub use candidate::{Candidate, CandidateId, CandidateOrigin, ExecutionOutcome, ExecutionStatus, PathKind};
pub use config::{ComponentToggles, ModelRole, PipelineConfig, SamplingParams, StageRoleMap};
pub use extract::{ExtractionKind, ExtractionOutcome};
pub use metrics::{CandidateJudgement, EvalRecord, Report};
pub use prompts::{PromptSet, PromptTemplate, RenderedPrompt, StageKind};
pub use results::{ResultTable, Value};
pub use schema::{ColumnInfo, DatabaseSchema, ForeignKeyInfo, Resolved, SchemaError, TableInfo};
