//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may use `-` or
//! `_` interchangeably. Every value remembers its line so errors can point
//! back at it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Keys accepted in a configuration file, across all commands.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "workers",
    "out",
    "alpha",
    "m",
    "m0",
    "k",
    "side",
    "continue",
    "tie-policy",
    "sequences",
    "length",
    "n-grid",
    "dist",
    "min-survivors",
    "table",
    "deltas",
    "taus",
    "replications",
    "max-n",
    "convention",
    "mu0",
    "sigma",
    "data",
    "column",
    "group-size",
    "br-k",
    "mcdonald-k",
    "mu",
    "tau",
    "delta",
    "n",
    "rep",
];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    source: Option<PathBuf>,
    entries: BTreeMap<String, Entry>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl KvConfig {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut cfg = Self::parse(&text)?;
        cfg.source = Some(path.to_path_buf());
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                Error::config(format!("config line {line}: expected `key = value`"))
            })?;
            let key = normalize(key);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::config(format!("config line {line}: unknown key `{key}`")));
            }
            let prev = entries.insert(
                key.clone(),
                Entry {
                    value: value.trim().to_string(),
                    line,
                },
            );
            if let Some(prev) = prev {
                return Err(Error::config(format!(
                    "config line {line}: key `{key}` already set on line {}",
                    prev.line
                )));
            }
        }
        Ok(Self {
            source: None,
            entries,
        })
    }

    fn locate(&self, line: usize) -> String {
        match &self.source {
            Some(p) => format!("{}:{line}", p.display()),
            None => format!("config line {line}"),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    /// Parses `key` if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get_checked(key, |_| Ok(()))
    }

    /// Parses `key` if present and runs `check` on it, attributing any
    /// failure to the key's line.
    pub fn get_checked<T: FromStr>(
        &self,
        key: &str,
        check: impl Fn(&T) -> std::result::Result<(), String>,
    ) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.entries.get(key) else {
            return Ok(None);
        };
        let v = e.value.parse::<T>().map_err(|err| {
            Error::config(format!(
                "{}: key `{key}`: invalid value `{}`: {err}",
                self.locate(e.line),
                e.value
            ))
        })?;
        check(&v).map_err(|msg| {
            Error::config(format!("{}: key `{key}`: {msg}", self.locate(e.line)))
        })?;
        Ok(Some(v))
    }
}

/// Comma-separated list of values.
pub fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

/// A list newtype so lists can flow through [`KvConfig::get`] and clap.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_list(s).map(List)
    }
}

/// An `n` grid: `standard`, a range `a..b` (inclusive), or an explicit list.
#[derive(Debug, Clone, PartialEq)]
pub struct NGrid(pub Option<Vec<usize>>);

impl FromStr for NGrid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "standard" {
            return Ok(NGrid(None));
        }
        if let Some((a, b)) = s.split_once("..") {
            let a: usize = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
            let b: usize = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
            if a == 0 || b < a {
                return Err(format!("range `{s}` must satisfy 1 <= a <= b"));
            }
            return Ok(NGrid(Some((a..=b).collect())));
        }
        parse_list(s).map(|v| NGrid(Some(v)))
    }
}
