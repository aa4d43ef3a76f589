//! Line-oriented `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys and values are
//! trimmed; the first `=` separates them, so values may themselves contain
//! `=`. Keys must be unique within a file.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvFile {
    entries: Vec<(String, String)>,
}

impl KvFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let location = format!("{origin}:{}", lineno + 1);
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config { location, message: format!("expected `key = value`, got `{line}`") });
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config { location, message: "empty key".into() });
            }
            if entries.iter().any(|(k, _)| k == key) {
                return Err(Error::Config { location, message: format!("duplicate key `{key}`") });
            }
            entries.push((key.to_string(), value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Entries whose key starts with `prefix`, with the prefix stripped.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.iter().filter_map(move |(k, v)| k.strip_prefix(prefix).map(|rest| (rest, v)))
    }
}
