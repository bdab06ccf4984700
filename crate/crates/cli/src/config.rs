//! Flat JSON configuration: every experiment has a default parameter struct
//! and a config file overrides individual keys of it.
//!
//! A config file is either a flat object of parameters or a manifest written
//! by a previous run, whose `parameters` object is used.

use crate::error::{CliError, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use std::path::Path;

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub values: Map<String, Value>,
    /// Experiment named by a manifest, if the file was one.
    pub experiment: Option<String>,
}

pub fn read_overrides(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_overrides(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_overrides(text: &str) -> Result<Overrides> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    let Value::Object(mut obj) = v else {
        return Err(CliError::Config("top level must be a JSON object".into()));
    };
    if let (Some(Value::String(_)), Some(Value::Object(_))) = (obj.get("experiment"), obj.get("parameters")) {
        let Some(Value::String(name)) = obj.remove("experiment") else { unreachable!() };
        let Some(Value::Object(params)) = obj.remove("parameters") else { unreachable!() };
        check_flat(&params)?;
        return Ok(Overrides { values: params, experiment: Some(name) });
    }
    check_flat(&obj)?;
    Ok(Overrides { values: obj, experiment: None })
}

/// Scalars, or arrays of scalars.
fn check_flat(obj: &Map<String, Value>) -> Result<()> {
    for (k, v) in obj {
        let nested = match v {
            Value::Object(_) => true,
            Value::Array(items) => items.iter().any(|i| matches!(i, Value::Object(_) | Value::Array(_))),
            _ => false,
        };
        if nested {
            return Err(CliError::Config(format!("key `{k}` is nested; configs are flat")));
        }
    }
    Ok(())
}

/// Overlay `overrides` (and `seed`, if given) on the defaults of `C`.
/// Returns the typed config and its full flat JSON form.
pub fn resolve<C: Serialize + DeserializeOwned + Default>(
    overrides: &Map<String, Value>,
    seed: Option<u64>,
) -> Result<(C, Map<String, Value>)> {
    let Value::Object(mut merged) = serde_json::to_value(C::default()).expect("config serializes") else {
        panic!("config types serialize to objects");
    };
    for (k, v) in overrides {
        if !merged.contains_key(k) {
            let known: Vec<&str> = merged.keys().map(String::as_str).collect();
            return Err(CliError::Config(format!("unknown key `{k}`; known keys: {}", known.join(", "))));
        }
        merged.insert(k.clone(), v.clone());
    }
    if let Some(s) = seed {
        if !merged.contains_key("seed") {
            return Err(CliError::Config("this experiment is deterministic and takes no seed".into()));
        }
        merged.insert("seed".into(), Value::from(s));
    }
    let cfg: C = serde_json::from_value(Value::Object(merged.clone())).map_err(|e| CliError::Config(e.to_string()))?;
    // Round-trip so the echoed parameters are exactly what ran.
    let Value::Object(resolved) = serde_json::to_value(&cfg).expect("config serializes") else { unreachable!() };
    Ok((cfg, resolved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    struct Demo {
        a: usize,
        b: f64,
        list: Vec<f64>,
        seed: u64,
    }

    impl Default for Demo {
        fn default() -> Self {
            Self { a: 1, b: 2.0, list: vec![1.0], seed: 7 }
        }
    }

    #[test]
    fn overrides_are_overlaid() {
        let o = parse_overrides(r#"{"b": 0.5, "list": [3, 4]}"#).unwrap();
        let (c, m) = resolve::<Demo>(&o.values, Some(9)).unwrap();
        assert_eq!(c, Demo { a: 1, b: 0.5, list: vec![3.0, 4.0], seed: 9 });
        assert_eq!(m["seed"], Value::from(9u64));
    }

    #[test]
    fn bad_configs_are_refused() {
        assert!(parse_overrides("[1]").is_err());
        assert!(parse_overrides("{").is_err());
        assert!(parse_overrides(r#"{"x": {"y": 1}}"#).is_err());
        assert!(parse_overrides(r#"{"x": [[1]]}"#).is_err());
        let o = parse_overrides(r#"{"zzz": 1}"#).unwrap();
        assert!(resolve::<Demo>(&o.values, None).is_err());
        let o = parse_overrides(r#"{"a": -1}"#).unwrap();
        assert!(resolve::<Demo>(&o.values, None).is_err());
    }

    #[test]
    fn manifests_supply_parameters() {
        let o = parse_overrides(r#"{"experiment": "demo", "parameters": {"a": 3}, "artifacts": []}"#).unwrap();
        assert_eq!(o.experiment.as_deref(), Some("demo"));
        assert_eq!(resolve::<Demo>(&o.values, None).unwrap().0.a, 3);
    }
}
