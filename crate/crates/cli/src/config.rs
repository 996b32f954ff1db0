use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// A validated command configuration with its canonical hash.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub config: T,
    pub value: Value,
    pub hash: String,
}

/// Parses a `key=value` override; the value is read as JSON when possible
/// and as a string otherwise.
fn parse_override(s: &str) -> CliResult<(String, Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::config(format!("override `{s}` is not key=value")))?;
    if k.is_empty() {
        return Err(CliError::config(format!("override `{s}` has an empty key")));
    }
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}

fn set_scalar(obj: &mut Map<String, Value>, key: &str, value: Value) -> CliResult<()> {
    if matches!(value, Value::Object(_) | Value::Array(_)) {
        return Err(CliError::config(format!("override of `{key}` must be a scalar")));
    }
    if matches!(obj.get(key), Some(Value::Object(_) | Value::Array(_))) {
        return Err(CliError::config(format!("`{key}` is not a top-level scalar")));
    }
    obj.insert(key.to_string(), value);
    Ok(())
}

/// Applies overrides, checks the schema version and deserializes with
/// unknown keys rejected.
pub fn resolve<T: DeserializeOwned>(mut value: Value, seed: Option<u64>, overrides: &[String]) -> CliResult<Loaded<T>> {
    let obj = value.as_object_mut().ok_or_else(|| CliError::config("configuration must be a JSON object"))?;
    for o in overrides {
        let (k, v) = parse_override(o)?;
        set_scalar(obj, &k, v)?;
    }
    if let Some(s) = seed {
        set_scalar(obj, "seed", Value::from(s))?;
    }
    match obj.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(CliError::config(format!("schema_version {v} is not supported (expected {SCHEMA_VERSION})"))),
        None => return Err(CliError::config("configuration lacks schema_version")),
    }
    let config: T = serde_json::from_value(value.clone()).map_err(|e| CliError::config(format!("invalid configuration: {e}")))?;
    let hash = hex::encode(Sha256::digest(serde_json::to_vec(&value).expect("JSON value serializes")));
    Ok(Loaded { config, value, hash })
}

pub fn load<T: DeserializeOwned>(path: &Path, seed: Option<u64>, overrides: &[String]) -> CliResult<Loaded<T>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::config(format!("{} is not valid JSON: {e}", path.display())))?;
    resolve(value, seed, overrides)
}
