//! Pipeline configuration and stage-to-model routing.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::extract::DEFAULT_ANSWER_PATTERNS;
use crate::prompts::StageKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRole {
    /// General-purpose model for pruning, linking and selection.
    Chat,
    /// SQL-specialised model for generation and correction.
    Sql,
}

impl ModelRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelRole::Chat => "chat",
            ModelRole::Sql => "sql",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    /// Deterministic decoding; forces a single completion.
    pub greedy: bool,
    pub num_candidates: u32,
    pub max_tokens: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            temperature: 0.2,
            top_p: 0.8,
            greedy: false,
            num_candidates: 1,
            max_tokens: 512,
        }
    }
}

impl SamplingParams {
    pub fn greedy(max_tokens: u32) -> Self {
        Self {
            temperature: 0.0,
            top_p: 1.0,
            greedy: true,
            num_candidates: 1,
            max_tokens,
        }
    }

    pub fn sampled(&self, num_candidates: u32, max_tokens: u32) -> Self {
        Self {
            greedy: false,
            num_candidates: num_candidates.max(1),
            max_tokens,
            ..self.clone()
        }
    }

    /// Completions a backend must return for this request.
    pub fn expected_completions(&self) -> usize {
        if self.greedy {
            1
        } else {
            self.num_candidates.max(1) as usize
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err("temperature must be >= 0".to_string());
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err("top_p must be in (0, 1]".to_string());
        }
        if self.num_candidates == 0 {
            return Err("num_candidates must be >= 1".to_string());
        }
        Ok(())
    }
}

/// Which model role serves each prompt stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRoleMap {
    pub pruning: ModelRole,
    pub linking: ModelRole,
    pub generation: ModelRole,
    pub correction: ModelRole,
    pub selection: ModelRole,
}

impl Default for StageRoleMap {
    fn default() -> Self {
        Self {
            pruning: ModelRole::Chat,
            linking: ModelRole::Chat,
            generation: ModelRole::Sql,
            correction: ModelRole::Sql,
            selection: ModelRole::Chat,
        }
    }
}

impl StageRoleMap {
    pub fn role_for(&self, stage: StageKind) -> ModelRole {
        match stage {
            StageKind::Pruning => self.pruning,
            StageKind::Linking => self.linking,
            StageKind::GenerationWithLinking | StageKind::GenerationWithoutLinking => self.generation,
            StageKind::Correction => self.correction,
            StageKind::SelectionQueryOnly | StageKind::SelectionWithResults => self.selection,
        }
    }
}

/// On/off switches for the ablatable pipeline components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComponentToggles {
    pub pruning: bool,
    pub linking: bool,
    pub multi_candidate: bool,
    pub correction: bool,
    pub selection: bool,
}

impl Default for ComponentToggles {
    fn default() -> Self {
        Self {
            pruning: true,
            linking: true,
            multi_candidate: true,
            correction: true,
            selection: true,
        }
    }
}

impl ComponentToggles {
    /// The full pipeline followed by one row per removed component.
    pub fn ablation_matrix() -> [(&'static str, ComponentToggles); 6] {
        let full = ComponentToggles::default();
        [
            ("Full Model", full),
            ("--w/o Schema Pruning", ComponentToggles { pruning: false, ..full }),
            ("--w/o Schema Linking", ComponentToggles { linking: false, ..full }),
            (
                "--w/o Multi-Candidate",
                ComponentToggles {
                    multi_candidate: false,
                    ..full
                },
            ),
            (
                "--w/o Correction",
                ComponentToggles {
                    correction: false,
                    ..full
                },
            ),
            (
                "--w/o Selection",
                ComponentToggles {
                    selection: false,
                    ..full
                },
            ),
        ]
    }

    /// Generation paths that run under these toggles.
    pub fn active_paths(&self) -> Vec<crate::PathKind> {
        crate::PathKind::ALL
            .into_iter()
            .filter(|p| (self.pruning || !p.uses_pruning()) && (self.linking || !p.uses_linking()))
            .collect()
    }
}

/// Candidates-per-path settings of the candidate-size sweep (pool 4..24).
pub const CANDIDATE_SWEEP: [u32; 6] = [1, 2, 3, 4, 5, 6];
/// Settings of the selection-rounds sweep.
pub const ROUNDS_SWEEP: [u32; 4] = [1, 3, 5, 7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub candidates_per_path: u32,
    pub correction_candidates: u32,
    pub selection_rounds: u32,
    pub sampling: SamplingParams,
    pub result_preview_rows: usize,
    pub result_preview_chars: usize,
    pub answer_patterns: Vec<String>,
    pub stage_roles: StageRoleMap,
    pub toggles: ComponentToggles,
    pub generation_max_tokens: u32,
    pub reasoning_max_tokens: u32,
    pub timeout_ms: u64,
    pub row_limit: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            candidates_per_path: 4,
            correction_candidates: 2,
            selection_rounds: 3,
            sampling: SamplingParams::default(),
            result_preview_rows: 5,
            result_preview_chars: 512,
            answer_patterns: DEFAULT_ANSWER_PATTERNS.iter().map(|p| p.to_string()).collect(),
            stage_roles: StageRoleMap::default(),
            toggles: ComponentToggles::default(),
            generation_max_tokens: 512,
            reasoning_max_tokens: 768,
            timeout_ms: 30_000,
            row_limit: 10_000,
        }
    }
}

impl PipelineConfig {
    /// Candidates requested per path once toggles are applied.
    pub fn effective_candidates_per_path(&self) -> u32 {
        if self.toggles.multi_candidate {
            self.candidates_per_path.max(1)
        } else {
            1
        }
    }

    pub fn initial_pool_size(&self) -> usize {
        self.toggles.active_paths().len() * self.effective_candidates_per_path() as usize
    }

    pub fn validate(&self) -> Result<(), String> {
        self.sampling.validate()?;
        if self.candidates_per_path == 0 {
            return Err("candidates_per_path must be >= 1".to_string());
        }
        if self.selection_rounds == 0 {
            return Err("selection_rounds must be >= 1".to_string());
        }
        if self.answer_patterns.iter().all(String::is_empty) {
            return Err("answer_patterns must contain a non-empty marker".to_string());
        }
        Ok(())
    }
}
