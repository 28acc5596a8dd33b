//! `--config FILE` support: a JSON object whose keys are long flag names.
//! Entries are appended to the command line unless the flag is already
//! present, so explicit flags win.

use std::ffi::OsString;

use serde_json::Value;

#[derive(Debug)]
pub struct ConfigError(pub String);

fn config_path(args: &[OsString]) -> Option<String> {
    let mut it = args.iter().map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
        if a == "--" {
            break;
        }
    }
    None
}

fn has_flag(args: &[OsString], name: &str) -> bool {
    let long = format!("--{name}");
    let eq = format!("--{name}=");
    args.iter().any(|a| {
        let a = a.to_string_lossy();
        a == long || a.starts_with(&eq)
    })
}

fn scalar(v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(format!("unsupported value {other}")),
    }
}

/// Returns `args` with flags from the config file merged in.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| ConfigError(format!("cannot read config {path}: {e}")))?;
    let json: Value = serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("config {path} is not valid JSON: {e}")))?;
    let Value::Object(map) = json else {
        return Err(ConfigError(format!("config {path} must be a JSON object")));
    };
    let mut extra = Vec::new();
    for (key, value) in map {
        if key == "config" || has_flag(&args, &key) {
            continue;
        }
        let flag = format!("--{key}");
        let bad = |e: String| ConfigError(format!("config key {key:?}: {e}"));
        match &value {
            Value::Bool(true) => extra.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                for item in items {
                    extra.push(flag.clone());
                    extra.push(scalar(item).map_err(bad)?);
                }
            }
            v => {
                extra.push(flag);
                extra.push(scalar(v).map_err(bad)?);
            }
        }
    }
    let mut out = args;
    out.extend(extra.into_iter().map(OsString::from));
    Ok(out)
}
