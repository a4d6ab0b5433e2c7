//! Run configuration files.
//!
//! A run configuration is a JSON document. String values may reference
//! environment variables as `${NAME}`; relative paths are resolved against
//! the directory holding the file.
//!
//! ```json
//! {
//!   "backends": {
//!     "chat": {"kind": "http", "base_url": "http://localhost:8000", "model": "qwen2.5-1.5b-instruct"},
//!     "sql":  {"kind": "http", "base_url": "${SQL_MODEL_URL}", "model": "prem-1b-sql"}
//!   },
//!   "pipeline": {"candidates_per_path": 4, "selection_rounds": 3},
//!   "dataset": {"path": "dev.json", "format": "bird"},
//!   "database_root": "dev_databases",
//!   "output_dir": "runs/dev",
//!   "workers": 4
//! }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use slimsql_core::{ModelRole, PipelineConfig};
use thiserror::Error;

use crate::backend::{Backend, BackendError, HttpBackend, HttpConfig, ModelRouter, Script, ScriptedBackend};
use crate::dataset::DatasetFormat;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("environment variable `{0}` referenced by the config is not set")]
    MissingEnv(String),
    #[error("config binds no backend; set backends.sql and/or backends.chat")]
    NoBackend,
    #[error("config has no dataset section")]
    NoDataset,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Where a role's completions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndpointConfig {
    /// An OpenAI-compatible chat-completions server.
    Http(HttpConfig),
    /// Canned replies read from a script file.
    Script { path: PathBuf },
    /// Canned replies given inline.
    InlineScript { script: Script },
}

impl EndpointConfig {
    pub fn build(&self) -> Result<Arc<dyn Backend>, BackendError> {
        Ok(match self {
            EndpointConfig::Http(cfg) => Arc::new(HttpBackend::new(cfg.clone())?),
            EndpointConfig::Script { path } => Arc::new(ScriptedBackend::new(Script::load(path)?)?),
            EndpointConfig::InlineScript { script } => Arc::new(ScriptedBackend::new(script.clone())?),
        })
    }
}

/// Backend per model role. A missing role is served by the other one, so
/// naming only `sql` gives the single-model setup.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendBindings {
    pub chat: Option<EndpointConfig>,
    pub sql: Option<EndpointConfig>,
}

impl BackendBindings {
    pub fn build_router(&self) -> Result<ModelRouter, ConfigError> {
        let chat = self.chat.as_ref().map(EndpointConfig::build).transpose()?;
        let sql = self.sql.as_ref().map(EndpointConfig::build).transpose()?;
        let mut router = ModelRouter::new();
        match (chat, sql) {
            (None, None) => return Err(ConfigError::NoBackend),
            (Some(one), None) | (None, Some(one)) => router = ModelRouter::unified(one),
            (Some(chat), Some(sql)) => {
                router.bind(ModelRole::Chat, chat).bind(ModelRole::Sql, sql);
            }
        }
        Ok(router)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub format: DatasetFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub backends: BackendBindings,
    /// Overrides of the pipeline defaults, including component toggles.
    pub pipeline: PipelineConfig,
    pub dataset: Option<DatasetConfig>,
    /// Directory holding `<db_id>/<db_id>.sqlite`.
    pub database_root: PathBuf,
    pub output_dir: PathBuf,
    pub workers: usize,
    /// Optional directory of prompt-template overrides.
    pub templates_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backends: BackendBindings::default(),
            pipeline: PipelineConfig::default(),
            dataset: None,
            database_root: PathBuf::from("databases"),
            output_dir: PathBuf::from("runs"),
            workers: 4,
            templates_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, |name| std::env::var(name).ok()).map_err(|e| match e {
            ConfigError::Invalid { message, .. } => ConfigError::Invalid {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    /// Parses config text, interpolating `${NAME}` through `env` and
    /// resolving relative paths against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path, env: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let invalid = |message: String| ConfigError::Invalid {
            path: PathBuf::from("<config>"),
            message,
        };
        let mut json: Json = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        interpolate(&mut json, &env)?;
        let mut config: RunConfig = serde_json::from_value(json).map_err(|e| invalid(e.to_string()))?;
        config.resolve_paths(base_dir);
        config.validate().map_err(invalid)?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.database_root);
        fix(&mut self.output_dir);
        if let Some(d) = &mut self.dataset {
            fix(&mut d.path);
        }
        if let Some(t) = &mut self.templates_dir {
            fix(t);
        }
        for endpoint in [&mut self.backends.chat, &mut self.backends.sql].into_iter().flatten() {
            if let EndpointConfig::Script { path } = endpoint {
                fix(path);
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.pipeline.validate()?;
        if self.workers == 0 {
            return Err("workers must be >= 1".into());
        }
        Ok(())
    }

    pub fn dataset(&self) -> Result<&DatasetConfig, ConfigError> {
        self.dataset.as_ref().ok_or(ConfigError::NoDataset)
    }

    /// The resolved configuration as embedded in reports. Settings that
    /// cannot change results (worker count, output location) are left out
    /// so a run can be resumed with different ones.
    pub fn echo(&self) -> Json {
        let mut json = serde_json::to_value(self).expect("config serialises");
        if let Json::Object(map) = &mut json {
            map.remove("workers");
            map.remove("output_dir");
        }
        json
    }
}

/// Replaces `${NAME}` in every string value.
fn interpolate(json: &mut Json, env: &impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
    match json {
        Json::String(s) => {
            if s.contains("${") {
                *s = expand(s, env)?;
            }
        }
        Json::Array(items) => {
            for item in items {
                interpolate(item, env)?;
            }
        }
        Json::Object(map) => {
            for value in map.values_mut() {
                interpolate(value, env)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn expand(s: &str, env: &impl Fn(&str) -> Option<String>) -> Result<String, ConfigError> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let Some(end) = after.find('}') else {
            out.push_str(&rest[start..]);
            return Ok(out);
        };
        let name = &after[..end];
        out.push_str(&env(name).ok_or_else(|| ConfigError::MissingEnv(name.to_string()))?);
        rest = &after[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(name: &str) -> Option<String> {
        (name == "HOST").then(|| "http://gpu:9000".to_string())
    }

    #[test]
    fn parses_interpolates_and_resolves() {
        let text = r#"{
            "backends": {"sql": {"kind": "http", "base_url": "${HOST}/", "model": "m"},
                         "chat": {"kind": "script", "path": "chat.json"}},
            "pipeline": {"candidates_per_path": 2, "toggles": {"selection": false}},
            "dataset": {"path": "dev.json", "format": "bird"},
            "workers": 2
        }"#;
        let cfg = RunConfig::parse(text, Path::new("/cfg"), env).unwrap();
        match &cfg.backends.sql {
            Some(EndpointConfig::Http(h)) => assert_eq!(h.base_url, "http://gpu:9000/"),
            other => panic!("unexpected {other:?}"),
        }
        match &cfg.backends.chat {
            Some(EndpointConfig::Script { path }) => assert_eq!(path, Path::new("/cfg/chat.json")),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(cfg.pipeline.candidates_per_path, 2);
        assert_eq!(cfg.pipeline.selection_rounds, 3);
        assert!(!cfg.pipeline.toggles.selection && cfg.pipeline.toggles.pruning);
        assert_eq!(cfg.dataset().unwrap().path, Path::new("/cfg/dev.json"));
        assert_eq!(cfg.database_root, Path::new("/cfg/databases"));
    }

    #[test]
    fn errors_are_specific() {
        let missing = r#"{"backends": {"sql": {"kind": "http", "base_url": "${NOPE}", "model": "m"}}}"#;
        assert!(
            matches!(RunConfig::parse(missing, Path::new("."), env), Err(ConfigError::MissingEnv(v)) if v == "NOPE")
        );
        assert!(matches!(
            RunConfig::parse(r#"{"workers": 0}"#, Path::new("."), env),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            RunConfig::parse(r#"{"bogus": 1}"#, Path::new("."), env),
            Err(ConfigError::Invalid { .. })
        ));
        let cfg = RunConfig::parse("{}", Path::new("."), env).unwrap();
        assert!(matches!(cfg.backends.build_router(), Err(ConfigError::NoBackend)));
        assert!(matches!(cfg.dataset(), Err(ConfigError::NoDataset)));
    }

    #[test]
    fn single_backend_serves_both_roles() {
        let text = r#"{"backends": {"sql": {"kind": "inline_script", "script": {"rules": [{"replies": [["x"]]}]}}}}"#;
        let router = RunConfig::parse(text, Path::new("."), env)
            .unwrap()
            .backends
            .build_router()
            .unwrap();
        assert!(router.is_unified());
    }
}
