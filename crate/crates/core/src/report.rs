//! Schema-versioned JSON reports with atomic writes.

use crate::config::ExperimentConfig;
use crate::error::Result;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub const SCHEMA: &str = "htype-report";
pub const SCHEMA_VERSION: u32 = 1;

/// One thresholded quantity.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= tolerance` (NaN fails).
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, pass: value <= tolerance }
    }

    /// A boolean outcome recorded as 0 (pass) or 1 (fail).
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 0.0 } else { 1.0 }, tolerance: 0.0, pass: ok }
    }
}

/// Non-deterministic fields, kept together so they can be masked.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Timestamp {
    pub unix_seconds: u64,
    pub wall_clock_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub conventions: Vec<String>,
    pub payload: Value,
    pub timestamp: Timestamp,
}

impl Report {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Report {
            schema: SCHEMA.into(),
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.entries().clone(),
            pass: true,
            checks: Vec::new(),
            conventions: Vec::new(),
            payload: Value::Null,
            timestamp: Timestamp { unix_seconds: 0, wall_clock_seconds: 0.0 },
        }
    }

    pub fn check(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn stamp(&mut self, started: std::time::Instant) {
        let unix = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        self.timestamp = Timestamp { unix_seconds: unix, wall_clock_seconds: started.elapsed().as_secs_f64() };
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// JSON with the timestamp zeroed; identical runs give identical bytes.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut c = self.clone();
        c.timestamp = Timestamp { unix_seconds: 0, wall_clock_seconds: 0.0 };
        c.to_json()
    }

    pub fn checks_csv(&self) -> String {
        let mut s = String::from("name,value,tolerance,pass\n");
        for c in &self.checks {
            s.push_str(&format!("{},{:e},{:e},{}\n", c.name, c.value, c.tolerance, c.pass));
        }
        s
    }
}

/// Write through a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("htype-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("r.json");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "b").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b");
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn nan_fails_checks() {
        let mut r = Report::new("x", &ExperimentConfig::new());
        r.check(Check::at_most("a", f64::NAN, 1.0));
        assert!(!r.pass);
    }
}
