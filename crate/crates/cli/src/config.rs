//! `key = value` configuration files. Command-line flags take precedence.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

/// Every key a configuration file may set. Keys match the long flag names.
pub const KEYS: &[&str] = &[
    "suite",
    "dict",
    "alphabet",
    "consts",
    "seed",
    "workers",
    "out",
    "lenient",
    "max-steps",
    "capacity",
    "min-len",
    "max-len",
    "l0",
    "l1",
    "seconds",
    "enum-seconds",
    "programs",
    "sample-size",
    "mode",
    "model",
    "base-words",
    "system-words",
    "candidates",
    "max-genes",
    "attempts",
    "budget",
];

#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines. Blank lines and lines starting with `#`
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`", i + 1);
            };
            let k = k.trim().replace('_', "-");
            if !KEYS.contains(&k.as_str()) {
                bail!("line {}: unknown key `{k}`", i + 1);
            }
            values.insert(k, v.trim().to_string());
        }
        Ok(Settings { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The flag value if given, else the parsed configuration value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key `{key}`: {e}")),
        }
    }

    /// Like [`pick`](Self::pick) with a default.
    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    /// A switch set by the flag or by `key = true`.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

/// Splits a word or number list on commas and whitespace.
pub fn split_list(s: &str) -> Vec<&str> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let s = Settings::parse("# run\nseed = 7\nmax_len=4\n\nlenient = true").unwrap();
        assert_eq!(s.get(None, "seed", 0u64).unwrap(), 7);
        assert_eq!(s.get(Some(9), "seed", 0u64).unwrap(), 9);
        assert_eq!(s.get(None, "max-len", 1usize).unwrap(), 4);
        assert_eq!(s.get(None, "l1", 12usize).unwrap(), 12);
        assert!(s.switch(false, "lenient").unwrap());
    }

    #[test]
    fn bad_lines_are_reported() {
        assert!(Settings::parse("seed 7").is_err());
        assert!(Settings::parse("colour = red").is_err());
        let s = Settings::parse("seed = x").unwrap();
        assert!(s.get(None, "seed", 0u64).is_err());
    }

    #[test]
    fn lists_split_on_commas_and_spaces() {
        assert_eq!(split_list("DUP, SWAP  +,-"), ["DUP", "SWAP", "+", "-"]);
    }
}
