//! Layered JSON configuration: built-in defaults, then an optional config
//! file, then flag overrides addressed by dotted path. The merged document
//! is validated against the job's JSON schema before deserialization.

use std::path::Path;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{config_error, io_error};

/// Parses `a.b.c=value`. The value is read as JSON when it parses, else as
/// a plain string, so `--set maze.size=25` and `--set policy=random` both work.
pub fn parse_assignment(s: &str) -> anyhow::Result<(String, Value)> {
    let (path, raw) = s
        .split_once('=')
        .ok_or_else(|| config_error(format!("override {s:?} is not of the form key.path=value")))?;
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(config_error(format!("bad override path {path:?}")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((path.to_string(), value))
}

/// Sets `path` inside `doc`, creating intermediate objects.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> anyhow::Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, key) in parts.iter().enumerate() {
        let obj = match cur {
            Value::Object(m) => m,
            _ => return Err(config_error(format!("{} is not an object", parts[..i].join(".")))),
        };
        if i + 1 == parts.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("path has at least one component")
}

pub fn get_path<'a>(doc: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(doc, |v, k| v.get(k))
}

/// Deep merge: objects merge key by key, everything else is replaced.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
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

pub fn read_json(path: &Path) -> anyhow::Result<Value> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

/// Schema of `T` as a JSON value.
pub fn schema_of<T: schemars::JsonSchema>() -> Value {
    serde_json::to_value(schemars::schema_for!(T)).expect("schemas serialize")
}

pub fn validate_against(schema: &Value, doc: &Value) -> anyhow::Result<()> {
    let validator = jsonschema::validator_for(schema).map_err(|e| io_error(format!("invalid built-in schema: {e}")))?;
    let problems: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| {
            let at = e.instance_path().to_string();
            if at.is_empty() { e.to_string() } else { format!("{at}: {e}") }
        })
        .collect();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(config_error(format!("config does not match schema:\n  {}", problems.join("\n  "))))
    }
}

/// User-supplied layers, before defaults are filled in.
#[derive(Debug, Default)]
pub struct Layers {
    pub file: Option<Value>,
    pub flags: Vec<(String, Value)>,
    pub sets: Vec<(String, Value)>,
}

impl Layers {
    pub fn new(file: Option<&Path>, sets: &[String]) -> anyhow::Result<Layers> {
        let file = file.map(read_json).transpose()?;
        if let Some(v) = &file {
            if !v.is_object() {
                return Err(config_error("config file must hold a JSON object"));
            }
        }
        let sets = sets.iter().map(|s| parse_assignment(s)).collect::<anyhow::Result<_>>()?;
        Ok(Layers { file, flags: Vec::new(), sets })
    }

    pub fn flag(&mut self, path: &str, value: impl Serialize) {
        self.flags.push((path.to_string(), serde_json::to_value(value).expect("flag values serialize")));
    }

    pub fn flag_opt<V: Serialize>(&mut self, path: &str, value: Option<V>) {
        if let Some(v) = value {
            self.flag(path, v);
        }
    }

    /// The user document: file, then flags, then `--set` overrides.
    pub fn user_doc(&self) -> anyhow::Result<Value> {
        let mut doc = self.file.clone().unwrap_or_else(|| Value::Object(Map::new()));
        for (path, v) in self.flags.iter().chain(&self.sets) {
            set_path(&mut doc, path, v.clone())?;
        }
        Ok(doc)
    }
}

/// Fills `defaults` from the user document, validates against the schema of
/// `T` and deserializes.
pub fn finish<T: Serialize + DeserializeOwned + schemars::JsonSchema>(defaults: &T, user: Value) -> anyhow::Result<T> {
    let mut doc = serde_json::to_value(defaults).expect("defaults serialize");
    merge(&mut doc, user);
    from_document(doc)
}

/// Validates a complete document (as stored in a run manifest).
pub fn from_document<T: DeserializeOwned + schemars::JsonSchema>(doc: Value) -> anyhow::Result<T> {
    validate_against(&schema_of::<T>(), &doc)?;
    serde_json::from_value(doc).map_err(|e| config_error(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn assignments_parse_json_or_fall_back_to_strings() {
        assert_eq!(parse_assignment("a.b=3").unwrap(), ("a.b".into(), json!(3)));
        assert_eq!(parse_assignment("p=privileged:1.0").unwrap(), ("p".into(), json!("privileged:1.0")));
        assert_eq!(parse_assignment("s=[15,25]").unwrap(), ("s".into(), json!([15, 25])));
        assert!(parse_assignment("nokey").is_err());
        assert!(parse_assignment("a..b=1").is_err());
    }

    #[test]
    fn merge_is_deep_for_objects_only() {
        let mut base = json!({"a": {"x": 1, "y": 2}, "l": [1, 2, 3]});
        merge(&mut base, json!({"a": {"y": 5}, "l": [9]}));
        assert_eq!(base, json!({"a": {"x": 1, "y": 5}, "l": [9]}));
    }

    #[test]
    fn set_path_creates_parents_and_rejects_scalars() {
        let mut doc = json!({"a": 1});
        set_path(&mut doc, "b.c.d", json!(true)).unwrap();
        assert_eq!(get_path(&doc, "b.c.d"), Some(&json!(true)));
        assert!(set_path(&mut doc, "a.x", json!(0)).is_err());
    }
}
