use std::collections::BTreeMap;
use std::str::FromStr;

use crate::{Error, Result};

/// Plain-text `key = value` settings; `#` starts a comment, blank lines are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i as u64 + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse { line: i as u64 + 1, msg: "empty key".into() });
            }
            map.insert(k.to_string(), v.trim().to_string());
        }
        Ok(KeyValues(map))
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.0.insert(key.into(), value.into());
    }

    /// Entries of `other` win.
    pub fn merge(&mut self, other: KeyValues) {
        self.0.extend(other.0);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Parsed value, or `default` when absent.
    pub fn value<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| Error::InvalidValue(format!("{key} = {s}"))),
        }
    }

    /// Comma-separated list, or `default` when absent.
    pub fn list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .split(',')
                .map(|p| p.trim().parse().map_err(|_| Error::InvalidValue(format!("{key} = {s}"))))
                .collect(),
        }
    }
}
