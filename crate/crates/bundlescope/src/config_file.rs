//! `key = value` configuration files for [`TrainConfig`].
//!
//! Blank lines and lines starting with `#` are ignored. Keys are the
//! `TrainConfig` field names; unknown keys are an error.

use std::path::Path;

use bundlescope_core::TrainConfig;
use serde_json::{Map, Value};

use crate::error::{Error, IoContext, Result};

fn parse_value(raw: &str) -> Value {
    // numbers and booleans keep their JSON type; anything else stays a string
    serde_json::from_str::<Value>(raw)
        .ok()
        .filter(|v| v.is_number() || v.is_boolean())
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Apply the settings in `text` on top of `base`.
pub fn apply_config_text(base: &TrainConfig, text: &str, path: &Path) -> Result<TrainConfig> {
    let Value::Object(mut fields) = serde_json::to_value(base)? else {
        unreachable!("TrainConfig serializes to an object")
    };
    let err = |line: usize, message: String| Error::ConfigFile {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut seen = Map::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, raw) = line
            .split_once('=')
            .ok_or_else(|| err(i + 1, format!("expected key = value, got {line:?}")))?;
        let key = key.trim();
        if !fields.contains_key(key) {
            return Err(err(i + 1, format!("unknown key {key:?}")));
        }
        if seen.insert(key.to_string(), Value::Null).is_some() {
            return Err(err(i + 1, format!("duplicate key {key:?}")));
        }
        let value = parse_value(raw.trim());
        // check this key alone so the error points at its line
        let mut probe = fields.clone();
        probe.insert(key.to_string(), value.clone());
        serde_json::from_value::<TrainConfig>(Value::Object(probe))
            .map_err(|e| err(i + 1, format!("{key}: {e}")))?;
        fields.insert(key.to_string(), value);
    }
    let config: TrainConfig = serde_json::from_value(Value::Object(fields))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config_file(base: &TrainConfig, path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path).at(path)?;
    apply_config_text(base, &text, path)
}
