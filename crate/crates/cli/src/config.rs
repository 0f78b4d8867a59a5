use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Section names of a config file; every other top-level key is shared by
/// all commands that know it.
const SECTIONS: [&str; 5] = ["simulate", "synth", "peaks", "fit", "phi0"];

pub struct Global {
    pub out: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub file: Option<Value>,
}

pub fn load(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    anyhow::ensure!(v.is_object(), "config {} must be a JSON object", path.display());
    Ok(v)
}

/// Merges `over` into `base`. Objects merge key by key unless `over`
/// carries a `type` tag, in which case it replaces the whole value.
fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) if !o.contains_key("type") => {
            for (k, v) in o {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Built-in defaults, then shared config keys, then the command's config
/// section, then flags.
pub fn resolve<T: Serialize + DeserializeOwned + Default>(
    command: &str,
    file: Option<&Value>,
    flags: Map<String, Value>,
) -> Result<T> {
    let mut v = serde_json::to_value(T::default())?;
    if let Some(Value::Object(f)) = file {
        let known: Vec<String> = v.as_object().map(|o| o.keys().cloned().collect()).unwrap_or_default();
        for (k, x) in f {
            if !SECTIONS.contains(&k.as_str()) && known.contains(k) {
                merge(v.get_mut(k).expect("known key"), x);
            }
        }
        if let Some(section) = f.get(command) {
            merge(&mut v, section);
        }
    }
    merge(&mut v, &Value::Object(flags));
    serde_json::from_value(v).with_context(|| format!("invalid {command} options"))
}

/// Collects flag overrides; unset flags are skipped.
#[derive(Default)]
pub struct Flags(Map<String, Value>);

impl Flags {
    pub fn set<T: Serialize>(&mut self, key: &str, value: Option<T>) -> &mut Self {
        if let Some(v) = value {
            self.0.insert(key.into(), serde_json::to_value(v).expect("flag values serialize"));
        }
        self
    }

    pub fn switch(&mut self, key: &str, on: bool) -> &mut Self {
        if on {
            self.0.insert(key.into(), Value::Bool(true));
        }
        self
    }

    pub fn into_map(self) -> Map<String, Value> {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;
    use serde_json::json;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(default, deny_unknown_fields)]
    struct Opts {
        a: f64,
        b: Option<String>,
        nested: Nested,
    }

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(default)]
    struct Nested {
        x: f64,
        y: f64,
    }

    #[test]
    fn flags_override_section_override_shared() {
        let file = json!({"a": 1.0, "nested": {"x": 2.0}, "other": 5, "fit": {"a": 3.0}, "peaks": {"b": "p"}});
        let o: Opts = resolve("fit", Some(&file), Map::new()).unwrap();
        assert_eq!(o, Opts { a: 3.0, b: None, nested: Nested { x: 2.0, y: 0.0 } });
        let mut flags = Flags::default();
        flags.set("a", Some(4.0)).set("b", None::<String>);
        let o: Opts = resolve("fit", Some(&file), flags.into_map()).unwrap();
        assert_eq!(o.a, 4.0);
        assert_eq!(o.b, None);
    }

    #[test]
    fn unknown_key_in_section_is_rejected() {
        let file = json!({"fit": {"typo": 1}});
        assert!(resolve::<Opts>("fit", Some(&file), Map::new()).is_err());
    }

    #[test]
    fn tagged_objects_replace() {
        let mut base = json!({"j": {"type": "sinusoidal", "E_J_GHz": 1.0}});
        merge(&mut base, &json!({"j": {"type": "channels", "Delta_GHz": 26.0, "T": [0.5]}}));
        assert_eq!(base["j"], json!({"type": "channels", "Delta_GHz": 26.0, "T": [0.5]}));
        merge(&mut base, &json!({"j": {"Delta_GHz": 20.0}}));
        assert_eq!(base["j"]["Delta_GHz"], 20.0);
    }
}
