//! Run configuration in three layers: built-in defaults, an optional JSON
//! file, then `key=value` overrides from the command line.
//!
//! Layers merge as JSON trees. File objects merge key by key into the
//! defaults; an override replaces one leaf addressed by a dotted path such as
//! `estimator.seed`. The merged tree is then deserialized strictly, so a
//! misspelt key anywhere is an error rather than a silent no-op.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::braid::BraidOptions;
use crate::estimator::{EstimateSettings, EstimatorConfig, WorkloadFamily};
use crate::qec::QecConfig;
use crate::teleport::TeleportOptions;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "SURFNET_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: serde_json::Error },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("override `{0}` is not of the form key=value")]
    BadOverride(String),
    #[error("{0}")]
    Invalid(serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub qec: QecConfig,
    pub braid: BraidOptions,
    pub teleport: TeleportOptions,
    pub estimator: EstimatorConfig,
    pub out_dir: PathBuf,
    /// Physical error rates visited by `sweep`.
    pub p_grid: Vec<f64>,
    pub families: Vec<WorkloadFamily>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            qec: QecConfig::default(),
            braid: BraidOptions::default(),
            teleport: TeleportOptions::default(),
            estimator: EstimatorConfig::default(),
            out_dir: PathBuf::from("runs"),
            p_grid: vec![1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3],
            families: vec![WorkloadFamily::serial(), WorkloadFamily::parallel()],
        }
    }
}

impl RunConfig {
    pub fn settings(&self) -> EstimateSettings {
        EstimateSettings {
            qec: self.qec.clone(),
            braid: self.braid,
            teleport: self.teleport.clone(),
            estimator: self.estimator.clone(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.estimator.seed
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Override {
    pub key: String,
    pub value: Value,
}

impl Override {
    pub fn new(key: &str, value: impl Into<Value>) -> Self {
        Override { key: key.to_string(), value: value.into() }
    }

    /// Parses `key=value`. The value is read as JSON when it parses, and as a
    /// bare string otherwise.
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::BadOverride(s.to_string()))?;
        if k.trim().is_empty() {
            return Err(ConfigError::BadOverride(s.to_string()));
        }
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        Ok(Override { key: k.trim().to_string(), value })
    }
}

/// Where each part of a resolved config came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_file: Option<PathBuf>,
    /// Top-level keys the file set.
    pub file_keys: Vec<String>,
    pub overrides: Vec<Override>,
}

/// Contents of `config.resolved.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub config: RunConfig,
    pub provenance: Provenance,
}

/// Config file from an explicit path, else from [`CONFIG_ENV`] when set and
/// non-empty.
pub fn config_path(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit.map(Path::to_path_buf).or_else(|| {
        std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
    })
}

pub fn resolve(file: Option<&Path>, overrides: &[Override]) -> Result<Resolved, ConfigError> {
    let mut tree = serde_json::to_value(RunConfig::default()).map_err(ConfigError::Invalid)?;
    log::info!("config layer 1: built-in defaults");
    let mut file_keys = Vec::new();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let layer: Value = serde_json::from_str(&text)
            .map_err(|source| ConfigError::File { path: path.to_path_buf(), source })?;
        if let Value::Object(m) = &layer {
            file_keys = m.keys().cloned().collect();
        }
        merge(&mut tree, layer);
        log::info!("config layer 2: {} sets {:?}", path.display(), file_keys);
    } else {
        log::info!("config layer 2: no config file");
    }
    for o in overrides {
        set(&mut tree, &o.key, o.value.clone())?;
        log::info!("config layer 3: {} = {}", o.key, o.value);
    }
    if overrides.is_empty() {
        log::info!("config layer 3: no flag overrides");
    }
    let config: RunConfig = serde_json::from_value(tree).map_err(|e| match file {
        Some(p) => ConfigError::File { path: p.to_path_buf(), source: e },
        None => ConfigError::Invalid(e),
    })?;
    Ok(Resolved {
        config,
        provenance: Provenance {
            config_file: file.map(Path::to_path_buf),
            file_keys,
            overrides: overrides.to_vec(),
        },
    })
}

fn merge(base: &mut Value, layer: Value) {
    match (base, layer) {
        (Value::Object(b), Value::Object(l)) => {
            for (k, v) in l {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set(tree: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut cur = tree;
    for part in key.split('.') {
        cur = cur
            .as_object_mut()
            .and_then(|m| m.get_mut(part))
            .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
    }
    *cur = value;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"estimator": {"seed": 5, "min_ops": 1000.0}, "out_dir": "x"}"#).unwrap();
        let r = resolve(Some(&path), &[Override::new("estimator.seed", 9)]).unwrap();
        assert_eq!(r.config.seed(), 9);
        assert_eq!(r.config.estimator.min_ops, 1000.0);
        assert_eq!(r.config.out_dir, PathBuf::from("x"));
        assert_eq!(r.config.estimator.max_ops, 1e12);
        assert_eq!(r.provenance.file_keys, vec!["estimator", "out_dir"]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            resolve(None, &[Override::new("estimator.sede", 1)]),
            Err(ConfigError::UnknownKey(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"qec": {"p_thresh": 0.01}}"#).unwrap();
        assert!(matches!(resolve(Some(&path), &[]), Err(ConfigError::File { .. })));
    }

    #[test]
    fn override_parsing() {
        assert_eq!(Override::parse("a.b=3").unwrap().value, serde_json::json!(3));
        assert_eq!(Override::parse("out_dir=runs/x").unwrap().value, serde_json::json!("runs/x"));
        assert!(Override::parse("novalue").is_err());
    }

    #[test]
    fn resolved_round_trips() {
        let r = resolve(None, &[]).unwrap();
        assert_eq!(r.config, RunConfig::default());
        let back: Resolved = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
