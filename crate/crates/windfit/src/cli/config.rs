//! Flat key/value config files with schema validation.
//!
//! The file format is `key = value` lines with `#` comments. Keys mirror the
//! long CLI flags; flags override file values. Each command validates against
//! its own key set and reports unknown keys with the allowed list.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::wpt::NodeId;

#[derive(Debug, Clone, Default)]
pub struct KvFile {
    map: BTreeMap<String, String>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected 'key = value', got '{raw}'",
                    lineno + 1
                )));
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            if map.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        Ok(KvFile { map })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(|s| s.as_str())
    }

    /// Reject keys outside the allowed set, with an actionable message.
    pub fn check_schema(&self, allowed: &[&str]) -> Result<()> {
        for k in self.keys() {
            if !allowed.contains(&k) {
                return Err(Error::Config(format!(
                    "unknown config key '{k}'; allowed keys: {}",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }
}

pub fn parse_value<T: FromStr>(key: &str, s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| {
        Error::Config(format!("invalid value '{s}' for '{key}': {e}"))
    })
}

/// Resolve one parameter: CLI flag wins, then the config file, then the
/// default.
pub fn resolve<T: FromStr + Clone>(
    kv: &KvFile,
    key: &str,
    flag: Option<T>,
    default: T,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    match kv.get(key) {
        Some(s) => parse_value(key, s),
        None => Ok(default),
    }
}

pub fn resolve_opt<T: FromStr>(kv: &KvFile, key: &str, flag: Option<T>) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    match kv.get(key) {
        Some(s) => Ok(Some(parse_value(key, s)?)),
        None => Ok(None),
    }
}

/// "j:k" -> NodeId.
pub fn parse_node(s: &str) -> Result<NodeId> {
    let Some((j, k)) = s.split_once(':') else {
        return Err(Error::Config(format!("node '{s}' must be 'level:index', e.g. 5:9")));
    };
    NodeId::new(
        parse_value::<usize>("node level", j.trim())?,
        parse_value::<usize>("node index", k.trim())?,
    )
}

/// "j:k,j:k" -> node list.
pub fn parse_node_list(s: &str) -> Result<Vec<NodeId>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_node(p.trim()))
        .collect()
}

/// The resolved configuration of one command run, as ordered key/value pairs.
/// Hashable canonical form and JSON view for provenance blocks; parsing the
/// canonical form back through [`KvFile`] recovers the same pairs.
#[derive(Debug, Clone, Default)]
pub struct EffectiveConfig(pub Vec<(String, String)>);

impl EffectiveConfig {
    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    /// Sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        let mut pairs = self.0.clone();
        pairs.sort();
        let mut s = String::new();
        for (k, v) in &pairs {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        for (k, v) in &self.0 {
            m.insert(k.clone(), serde_json::Value::String(v.clone()));
        }
        serde_json::Value::Object(m)
    }
}
