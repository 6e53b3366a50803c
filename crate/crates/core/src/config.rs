//! Experiment configuration: a `key = value` text file mirrored by CLI flags.
//!
//! Values are kept as validated strings so that parse and print round-trip
//! exactly. Unknown keys are rejected.

use crate::error::{HtypeError, Result};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Str,
    Usize,
    U64,
    F64,
    F64List,
    StrList,
    Range,
    Bool,
}

const KEYS: &[(&str, Kind)] = &[
    ("operation", Kind::Str),
    ("model", Kind::Str),
    ("models", Kind::StrList),
    ("scale", Kind::F64),
    ("point", Kind::F64List),
    ("n", Kind::Usize),
    ("m", Kind::Usize),
    ("tol", Kind::F64),
    ("budget", Kind::U64),
    ("seed", Kind::U64),
    ("radii", Kind::Range),
    ("t", Kind::F64),
    ("at", Kind::F64List),
    ("s_nodes", Kind::Usize),
    ("mc_budget", Kind::U64),
    ("mc_s_nodes", Kind::Usize),
    ("points", Kind::Usize),
    ("rays", Kind::Usize),
    ("suite", Kind::Str),
    ("check", Kind::Bool),
    ("contracts", Kind::Bool),
    ("rotations", Kind::Usize),
    ("json", Kind::Str),
    ("csv", Kind::Str),
    ("out", Kind::Str),
];

fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, t)| *t)
}

fn parse_f64_list(v: &str) -> Option<Vec<f64>> {
    v.split(',').map(|s| s.trim().parse::<f64>().ok()).collect()
}

/// `a:b:count` (inclusive, evenly spaced) or a comma list.
pub fn parse_radii(v: &str) -> Result<Vec<f64>> {
    let bad = || HtypeError::Config(format!("radii '{v}' is neither lo:hi:count nor a comma list"));
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if count < 2 || !(hi > lo) || !(lo > 0.0) {
            return Err(bad());
        }
        Ok((0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect())
    } else {
        parse_f64_list(v).filter(|r| r.iter().all(|x| *x > 0.0)).ok_or_else(bad)
    }
}

fn validate(key: &str, value: &str) -> Result<()> {
    let kind = kind_of(key).ok_or_else(|| HtypeError::Config(format!("unknown key '{key}'")))?;
    let bad = |what: &str| HtypeError::Config(format!("key '{key}': '{value}' is not {what}"));
    if value.contains('\n') || value.trim() != value || value.is_empty() {
        return Err(bad("a non-empty single-line value"));
    }
    match kind {
        Kind::Str => Ok(()),
        Kind::StrList => {
            // whitespace-separated, since model ids contain commas
            if value.split_whitespace().next().is_none() {
                Err(bad("a whitespace-separated list"))
            } else {
                Ok(())
            }
        }
        Kind::Usize => value.parse::<usize>().map(|_| ()).map_err(|_| bad("a non-negative integer")),
        Kind::U64 => parse_count(value).map(|_| ()).ok_or_else(|| bad("a non-negative integer")),
        Kind::F64 => value.parse::<f64>().ok().filter(|x| x.is_finite()).map(|_| ()).ok_or_else(|| bad("a finite number")),
        Kind::F64List => parse_f64_list(value).map(|_| ()).ok_or_else(|| bad("a comma list of numbers")),
        Kind::Range => parse_radii(value).map(|_| ()),
        Kind::Bool => value.parse::<bool>().map(|_| ()).map_err(|_| bad("true or false")),
    }
}

/// Integer counts also accept exact float notation such as `1e8`.
fn parse_count(v: &str) -> Option<u64> {
    if let Ok(k) = v.parse::<u64>() {
        return Some(k);
    }
    let f: f64 = v.parse().ok()?;
    (f >= 0.0 && f.fract() == 0.0 && f < 1.8e19).then_some(f as u64)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HtypeError::Config(format!("line {}: expected key = value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if cfg.values.contains_key(k) {
                return Err(HtypeError::Config(format!("line {}: duplicate key '{k}'", no + 1)));
            }
            cfg.set(k, v).map_err(|e| HtypeError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        validate(key, value)?;
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Set when `value` is present.
    pub fn set_opt<T: ToString>(&mut self, key: &str, value: Option<T>) -> Result<()> {
        match value {
            Some(v) => self.set(key, &v.to_string()),
            None => Ok(()),
        }
    }

    /// Entries of `over` replace ours.
    pub fn merged(&self, over: &ExperimentConfig) -> ExperimentConfig {
        let mut out = self.clone();
        for (k, v) in &over.values {
            out.values.insert(k.clone(), v.clone());
        }
        out
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn str(&self, key: &str) -> Option<String> {
        self.raw(key).map(|s| s.to_string())
    }

    pub fn f64(&self, key: &str) -> Option<f64> {
        self.raw(key).and_then(|v| v.parse().ok())
    }

    pub fn usize(&self, key: &str) -> Option<usize> {
        self.raw(key).and_then(|v| v.parse().ok())
    }

    pub fn u64(&self, key: &str) -> Option<u64> {
        self.raw(key).and_then(parse_count)
    }

    pub fn bool(&self, key: &str) -> Option<bool> {
        self.raw(key).and_then(|v| v.parse().ok())
    }

    pub fn f64_list(&self, key: &str) -> Option<Vec<f64>> {
        self.raw(key).and_then(parse_f64_list)
    }

    pub fn str_list(&self, key: &str) -> Option<Vec<String>> {
        self.raw(key).map(|v| v.split_whitespace().map(str::to_string).collect())
    }

    pub fn radii(&self) -> Option<Vec<f64>> {
        self.raw("radii").and_then(|v| parse_radii(v).ok())
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.values {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_reject() {
        let c = ExperimentConfig::parse("# run\nmodel = hopf-s3@1\nbudget = 1e8\nradii = 0.1:0.4:7\n").unwrap();
        assert_eq!(c.u64("budget"), Some(100_000_000));
        assert_eq!(c.radii().unwrap().len(), 7);
        assert!(ExperimentConfig::parse("colour = blue\n").is_err());
        assert!(ExperimentConfig::parse("seed = -1\n").is_err());
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2\n").is_err());
    }

    #[test]
    fn flags_win() {
        let file = ExperimentConfig::parse("seed = 1\ntol = 1e-5\n").unwrap();
        let mut flags = ExperimentConfig::new();
        flags.set("seed", "7").unwrap();
        let c = file.merged(&flags);
        assert_eq!(c.u64("seed"), Some(7));
        assert_eq!(c.f64("tol"), Some(1e-5));
    }
}
