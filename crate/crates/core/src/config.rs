//! JSON run configurations, schema versioning and dot-path overrides.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{LevelModel, Polarity};
use crate::circuit::{CircuitConstants, FluxConfig};
use crate::error::{Error, Result};
use crate::operator::Mode;
use crate::spectroscopy::SCHEMA_VERSION;

/// Reads a config file, checks `schema_version`, and applies `key.path=value` overrides.
/// The returned value no longer carries `schema_version`.
pub fn load(path: &Path, overrides: &[String]) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    resolve(value, overrides)
}

pub fn resolve(mut value: Value, overrides: &[String]) -> Result<Value> {
    let obj = value.as_object_mut().ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
    match obj.remove("schema_version") {
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION as u64) => {}
        Some(v) => return Err(Error::Config(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}"))),
        None => return Err(Error::Config("missing schema_version".into())),
    }
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    Ok(value)
}

/// `a.b.2.c=value`; the value is parsed as JSON and taken as a string otherwise.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Error::Config(format!("override {spec:?} has an empty key")));
    }
    let new: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        cur = match cur {
            Value::Object(m) => {
                if last {
                    m.insert((*key).to_string(), new);
                    return Ok(());
                }
                m.entry((*key).to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(a) => {
                let idx: usize = key.parse().map_err(|_| Error::Config(format!("override {path}: {key:?} is not an array index")))?;
                let len = a.len();
                let slot = a.get_mut(idx).ok_or_else(|| Error::Config(format!("override {path}: index {idx} out of range ({len})")))?;
                if last {
                    *slot = new;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::Config(format!("override {path}: {key:?} is below a scalar"))),
        };
    }
    Ok(())
}

pub fn parse<T: DeserializeOwned>(value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeriveConfig {
    pub constants: CircuitConstants,
    pub flux: FluxConfig,
}

/// A labelled operating point drawn on the regime map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerSpec {
    pub label: String,
    pub flux: FluxConfig,
    /// Coupling extracted from spectroscopy, GHz; the model value is used when absent.
    #[serde(default, rename = "J")]
    pub j: Option<f64>,
    #[serde(default, rename = "V")]
    pub v: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    pub constants: CircuitConstants,
    pub resolution: usize,
    #[serde(default)]
    pub markers: Vec<MarkerSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Spectral map CSV, relative to the working directory.
    pub map: String,
    pub probe: Mode,
    pub polarity: Polarity,
    pub min_prominence: f64,
    pub model: LevelModel,
    /// Gaussian noise (GHz) added to peak centres before fitting, drawn from `--seed`.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub outlier_cut: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_set_nested_values() {
        let mut v = json!({"a": {"b": 1}, "dims": [6, 6]});
        apply_override(&mut v, "a.b=2.5").unwrap();
        apply_override(&mut v, "dims.1=8").unwrap();
        apply_override(&mut v, "probe=B").unwrap();
        assert_eq!(v, json!({"a": {"b": 2.5}, "dims": [6, 8], "probe": "B"}));
        assert!(apply_override(&mut v, "dims.5=1").is_err());
        assert!(apply_override(&mut v, "a.b.c=1").is_err());
        assert!(apply_override(&mut v, "novalue").is_err());
    }

    #[test]
    fn schema_version_is_required() {
        assert!(resolve(json!({"x": 1}), &[]).is_err());
        assert!(resolve(json!({"schema_version": 2}), &[]).is_err());
        assert_eq!(resolve(json!({"schema_version": 1, "x": 1}), &[]).unwrap(), json!({"x": 1}));
    }
}
