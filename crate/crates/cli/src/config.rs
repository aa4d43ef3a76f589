//! Service configuration, read from a `key = value` file.
//!
//! ```text
//! bind = 127.0.0.1:8080
//! default_model = clin_mut
//! max_body_bytes = 65536
//! log_level = info
//! model.clin_mut = models/clin_mut.json
//! model.exp = models/exp.json
//! ```
//!
//! Model paths are resolved against the directory holding the file.
//! `EBM_AML_BIND` and `EBM_AML_LOG` override `bind` and `log_level`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ebm_aml::kv::KvFile;
use thiserror::Error;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_MODEL: &str = "clin_mut";
pub const DEFAULT_MAX_BODY_BYTES: usize = 64 * 1024;
pub const BIND_ENV: &str = "EBM_AML_BIND";
pub const LOG_ENV: &str = "EBM_AML_LOG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Kv(#[from] ebm_aml::Error),
    #[error("{origin}: `{key}` = `{value}` is not valid: {reason}")]
    BadValue { origin: String, key: String, value: String, reason: String },
    #[error("{0}: no models registered (add `model.<id> = <path>` lines)")]
    NoModels(String),
    #[error("{origin}: default model `{id}` is not registered")]
    MissingDefault { origin: String, id: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub bind: String,
    pub default_model: String,
    pub max_body_bytes: usize,
    pub log_level: String,
    pub models: BTreeMap<String, PathBuf>,
    /// File the config was read from, kept for reloads.
    pub source: Option<PathBuf>,
}

impl ServiceConfig {
    /// Parses config text; `base` anchors relative model paths.
    pub fn parse(text: &str, origin: &str, base: &Path) -> Result<Self, ConfigError> {
        let kv = KvFile::parse(text, origin)?;
        let bad = |key: &str, value: &str, reason: String| ConfigError::BadValue {
            origin: origin.to_string(),
            key: key.to_string(),
            value: value.to_string(),
            reason,
        };
        let mut models = BTreeMap::new();
        for (id, path) in kv.with_prefix("model.") {
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(bad(&format!("model.{id}"), path, "model ids use letters, digits, `_` and `-`".into()));
            }
            models.insert(id.to_string(), base.join(path));
        }
        for (key, value) in kv.iter() {
            if !key.starts_with("model.") && !["bind", "default_model", "max_body_bytes", "log_level"].contains(&key) {
                return Err(bad(key, value, "unknown key".into()));
            }
        }
        let max_body_bytes = match kv.get("max_body_bytes") {
            Some(v) => v.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| bad("max_body_bytes", v, "expected a positive integer".into()))?,
            None => DEFAULT_MAX_BODY_BYTES,
        };
        let config = Self {
            bind: kv.get("bind").unwrap_or(DEFAULT_BIND).to_string(),
            default_model: kv.get("default_model").unwrap_or(DEFAULT_MODEL).to_string(),
            max_body_bytes,
            log_level: kv.get("log_level").unwrap_or("info").to_string(),
            models,
            source: None,
        };
        if config.models.is_empty() {
            return Err(ConfigError::NoModels(origin.to_string()));
        }
        if !config.models.contains_key(&config.default_model) {
            return Err(ConfigError::MissingDefault { origin: origin.to_string(), id: config.default_model });
        }
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ebm_aml::Error::Io { path: path.to_path_buf(), source: e })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut config = Self::parse(&text, &path.display().to_string(), base)?;
        config.source = Some(path.to_path_buf());
        Ok(config)
    }

    /// Applies `EBM_AML_BIND` / `EBM_AML_LOG` when set.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(bind) = std::env::var(BIND_ENV) {
            self.bind = bind;
        }
        if let Ok(level) = std::env::var(LOG_ENV) {
            self.log_level = level;
        }
        self
    }
}
