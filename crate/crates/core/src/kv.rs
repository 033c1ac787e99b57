//! Plain `key=value` text used by sidecar files and run configuration.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub type KvMap = BTreeMap<String, String>;

/// Parses `key=value` lines. Blank lines and `#` comments are skipped;
/// whitespace around keys and values is trimmed. Duplicate keys are rejected.
pub fn parse(text: &str) -> Result<KvMap> {
    let mut map = KvMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key=value, got {line:?}", lineno + 1)));
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {key}", lineno + 1)));
        }
    }
    Ok(map)
}

pub fn render(map: &KvMap) -> String {
    let mut s = String::new();
    for (k, v) in map {
        s.push_str(k);
        s.push('=');
        s.push_str(v);
        s.push('\n');
    }
    s
}

pub fn read(path: &Path) -> Result<KvMap> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}

pub fn write(path: &Path, map: &KvMap) -> Result<()> {
    std::fs::write(path, render(map)).map_err(|e| Error::io(path, e))
}

/// Typed lookup with a descriptive error.
pub fn get<T: std::str::FromStr>(map: &KvMap, key: &str) -> Result<T> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::Config(format!("missing key {key}")))?;
    raw.parse()
        .map_err(|_| Error::Config(format!("key {key}: cannot parse {raw:?}")))
}
