//! Flat dotted-key JSON configuration with typed access, default fallbacks
//! and unknown-key detection. Flags override file values; every error names
//! the offending key.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

pub struct ConfigMap {
    values: BTreeMap<String, Value>,
    visited: RefCell<BTreeSet<String>>,
}

impl ConfigMap {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let values = match path {
            None => BTreeMap::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                let root: Value = serde_json::from_str(&text)
                    .with_context(|| format!("parsing config file {}", p.display()))?;
                let Value::Object(map) = root else {
                    bail!("config file {} must hold a JSON object", p.display());
                };
                let mut flat = BTreeMap::new();
                for (key, value) in map {
                    if value.is_object() {
                        bail!(
                            "config key `{key}` holds a nested object; use flat dotted keys \
                             like `drive.omega_b_hz`"
                        );
                    }
                    flat.insert(key, value);
                }
                flat
            }
        };
        Ok(Self {
            values,
            visited: RefCell::new(BTreeSet::new()),
        })
    }

    fn get(&self, key: &str) -> Option<&Value> {
        let v = self.values.get(key);
        if v.is_some() {
            self.visited.borrow_mut().insert(key.to_string());
        }
        v
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => {
                let x = v
                    .as_f64()
                    .with_context(|| format!("config key `{key}`: expected a number, got {v}"))?;
                if !x.is_finite() {
                    bail!("config key `{key}`: value must be finite, got {x}");
                }
                Ok(x)
            }
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .with_context(|| format!("config key `{key}`: expected a non-negative integer, got {v}")),
        }
    }

    pub fn u64_opt(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(Some)
                .with_context(|| format!("config key `{key}`: expected a non-negative integer, got {v}")),
        }
    }

    pub fn usize_opt(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.u64_opt(key)?.map(|x| x as usize))
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_bool()
                .with_context(|| format!("config key `{key}`: expected true or false, got {v}")),
        }
    }

    pub fn string(&self, key: &str, default: &str) -> Result<String> {
        match self.get(key) {
            None => Ok(default.to_string()),
            Some(v) => v
                .as_str()
                .map(str::to_string)
                .with_context(|| format!("config key `{key}`: expected a string, got {v}")),
        }
    }

    pub fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => {
                let arr = v.as_array().with_context(|| {
                    format!("config key `{key}`: expected an array of numbers, got {v}")
                })?;
                arr.iter()
                    .map(|item| {
                        let x = item.as_f64().with_context(|| {
                            format!("config key `{key}`: expected numeric entries, got {item}")
                        })?;
                        if !x.is_finite() {
                            bail!("config key `{key}`: entries must be finite, got {x}");
                        }
                        Ok(x)
                    })
                    .collect()
            }
        }
    }

    pub fn string_list(&self, key: &str, default: &[&str]) -> Result<Vec<String>> {
        match self.get(key) {
            None => Ok(default.iter().map(|s| s.to_string()).collect()),
            Some(v) => {
                let arr = v.as_array().with_context(|| {
                    format!("config key `{key}`: expected an array of strings, got {v}")
                })?;
                arr.iter()
                    .map(|item| {
                        item.as_str().map(str::to_string).with_context(|| {
                            format!("config key `{key}`: expected string entries, got {item}")
                        })
                    })
                    .collect()
            }
        }
    }

    /// Fails when the file contained keys no command consumed, naming each.
    /// Clone of every loaded key/value pair, for echoing into the manifest.
    pub fn echo(&self) -> serde_json::Map<String, Value> {
        self.values
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn reject_unknown(&self) -> Result<()> {
        let visited = self.visited.borrow();
        let unknown: Vec<&String> = self
            .values
            .keys()
            .filter(|k| !visited.contains(*k))
            .collect();
        if !unknown.is_empty() {
            bail!(
                "unrecognized config key(s): {}",
                unknown
                    .iter()
                    .map(|k| format!("`{k}`"))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
        }
        Ok(())
    }
}
