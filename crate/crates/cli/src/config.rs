//! Run configuration: flat `key = value` text or a flat JSON object.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return Self::parse_json(text);
        }
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            values.insert(normalize_key(key), value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn parse_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value.as_object().ok_or_else(|| anyhow!("JSON config must be an object"))?;
        let mut values = BTreeMap::new();
        for (key, v) in obj {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(|i| match i {
                        serde_json::Value::String(s) => Ok(s.clone()),
                        serde_json::Value::Number(n) => Ok(n.to_string()),
                        other => Err(anyhow!("key {key}: unsupported list element {other}")),
                    })
                    .collect::<Result<Vec<_>>>()?
                    .join(","),
                other => bail!("key {key}: unsupported value {other}"),
            };
            values.insert(normalize_key(key), s);
        }
        Ok(Self { values })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(normalize_key(key), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key {key} = {v:?}: {e}")))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<T>().map_err(|e| anyhow!("config key {key}: {s:?}: {e}")))
                    .collect()
            })
            .transpose()
    }

    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.values
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_text() {
        let c = Config::parse("# desk\nbase_samples = 64\nsecond-order=true  # trailing\n\nrecord_iterations = 1, 5,30\n").unwrap();
        assert_eq!(c.get::<usize>("base_samples").unwrap(), Some(64));
        assert_eq!(c.get::<bool>("second_order").unwrap(), Some(true));
        assert_eq!(c.list::<usize>("record_iterations").unwrap(), Some(vec![1, 5, 30]));
        assert_eq!(c.get::<usize>("missing").unwrap(), None);
    }

    #[test]
    fn json_object() {
        let c = Config::parse(r#"{"base_samples": 8, "forward_model": "asm", "record_iterations": [1, 2]}"#).unwrap();
        assert_eq!(c.get::<usize>("base_samples").unwrap(), Some(8));
        assert_eq!(c.raw("forward_model"), Some("asm"));
        assert_eq!(c.list::<usize>("record_iterations").unwrap(), Some(vec![1, 2]));
    }

    #[test]
    fn errors() {
        assert!(Config::parse("no equals sign").is_err());
        let c = Config::parse("n = many").unwrap();
        assert!(c.get::<usize>("n").is_err());
    }
}
