//! Layered settings: built-in defaults, then a JSON `--config` object, then
//! explicit flags.

use std::fs;
use std::path::{Path, PathBuf};

use pathwise::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Environment variable that supplies the output directory when no
/// `--output` flag is given.
pub const OUTPUT_ENV: &str = "PATHWISE_OUTPUT_DIR";

fn object(value: Value, what: &str) -> Result<Map<String, Value>> {
    match value {
        Value::Object(m) => Ok(m),
        _ => Err(Error::Config(format!("{what} must be a JSON object"))),
    }
}

/// Merges `defaults ← config file ← flags`. Flags are the serialised
/// argument struct with absent options skipped. Unknown config keys are
/// rejected.
pub fn resolve<R, A>(flags: &A, config: Option<&Path>) -> Result<R>
where
    R: Serialize + DeserializeOwned + Default,
    A: Serialize,
{
    let mut merged = object(serde_json::to_value(R::default())?, "defaults")?;
    if let Some(path) = config {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let file = object(serde_json::from_str(&text)?, "--config file")?;
        for (k, v) in file {
            if !merged.contains_key(&k) {
                return Err(Error::Config(format!("unknown key {k:?} in {}", path.display())));
            }
            merged.insert(k, v);
        }
    }
    for (k, v) in object(serde_json::to_value(flags)?, "flags")? {
        if v.is_null() {
            continue;
        }
        if !merged.contains_key(&k) {
            return Err(Error::Usage(format!("flag {k:?} does not apply here")));
        }
        merged.insert(k, v);
    }
    // the environment sits between an explicit flag and the config file
    let flag_output = serde_json::to_value(flags)?.get("output").is_some_and(|v| !v.is_null());
    if !flag_output {
        if let Some(dir) = std::env::var_os(OUTPUT_ENV).filter(|d| !d.is_empty()) {
            merged.insert("output".into(), Value::String(PathBuf::from(dir).to_string_lossy().into_owned()));
        }
    }
    Ok(serde_json::from_value(Value::Object(merged))?)
}

/// Fails with a usage error when a required setting is still missing.
pub fn required<T: Clone>(value: &Option<T>, flag: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Error::Usage(format!("--{flag} is required")))
}
