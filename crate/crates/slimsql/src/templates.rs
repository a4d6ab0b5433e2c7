//! Loading prompt-template overrides from a directory.
//!
//! Files are named `<stage>.system.txt` and `<stage>.user.txt`, e.g.
//! `correction.user.txt`. Any file that is absent keeps the built-in text.

use std::path::{Path, PathBuf};

use slimsql_core::prompts::PromptError;
use slimsql_core::{PromptSet, PromptTemplate, StageKind};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("cannot read template override {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("template override directory {0} does not exist")]
    MissingDirectory(PathBuf),
    #[error("invalid template override {path}: {source}")]
    Invalid { path: PathBuf, source: PromptError },
    #[error("unrecognised template override file {0}")]
    UnknownFile(PathBuf),
}

/// Built-in templates with any overrides found in `dir` applied.
pub fn load_prompt_set(dir: &Path) -> Result<PromptSet, TemplateError> {
    if !dir.is_dir() {
        return Err(TemplateError::MissingDirectory(dir.to_path_buf()));
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| TemplateError::Io { path, source }
    };
    for entry in std::fs::read_dir(dir).map_err(io(dir))? {
        let path = entry.map_err(io(dir))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let known = StageKind::ALL
            .iter()
            .any(|s| name == format!("{s}.system.txt") || name == format!("{s}.user.txt"));
        if name.ends_with(".txt") && !known {
            return Err(TemplateError::UnknownFile(path));
        }
    }

    let mut set = PromptSet::builtin();
    for stage in StageKind::ALL {
        let system_path = dir.join(format!("{stage}.system.txt"));
        let user_path = dir.join(format!("{stage}.user.txt"));
        if !system_path.is_file() && !user_path.is_file() {
            continue;
        }
        let builtin = set.get(stage).clone();
        let read = |path: &Path, fallback: String| -> Result<String, TemplateError> {
            if path.is_file() {
                std::fs::read_to_string(path).map_err(io(path))
            } else {
                Ok(fallback)
            }
        };
        let system = read(&system_path, builtin.system_text)?;
        let user = read(&user_path, builtin.user_text)?;
        let template = PromptTemplate::new(stage, system, user).map_err(|source| TemplateError::Invalid {
            path: if user_path.is_file() {
                user_path.clone()
            } else {
                system_path.clone()
            },
            source,
        })?;
        set.replace(template);
    }
    Ok(set)
}
