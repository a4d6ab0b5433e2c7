//! Text-to-SQL over SQLite databases with small language models.
//!
//! The pipeline prunes the schema, links question terms to columns, generates
//! candidates along four prompt paths, repairs failing candidates from their
//! execution errors and lets a model vote on the survivors. Reasoning stages
//! and SQL stages can be served by different models.
//!
//! Pure logic lives in [`slimsql_core`]; this crate adds SQLite access,
//! model backends, the benchmark harness and the command-line tool.

pub mod backend;
pub mod catalog;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod evaluation;
pub mod executor;
pub mod pipeline;
pub mod templates;
pub mod trace;

pub use slimsql_core as core;
