use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::rng::PRNG_ID;

use super::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            // shortest representation that reads back to the same bits
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Text(v) => f.write_str(v),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

/// A result table, written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.header.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Numeric column as floats; text cells are skipped.
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        Some(
            self.column(name)?
                .into_iter()
                .filter_map(|v| match v {
                    Value::Int(i) => Some(*i as f64),
                    Value::Float(x) => Some(*x),
                    Value::Text(_) => None,
                })
                .collect(),
        )
    }
}

/// One pass/fail decision with the number it was made on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(name: &str, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            detail: detail.into(),
        }
    }

    pub fn flag(name: &str, passed: bool, measured: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            measured,
            tolerance,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: measured {:.6e}, tolerance {:.6e}; {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub kind: String,
    /// SHA-256 of the effective config, after overrides, in canonical TOML.
    pub config_sha256: String,
    pub code_version: String,
    pub prng: String,
    pub seed: u64,
    pub tables: Vec<String>,
}

impl Manifest {
    pub fn for_config(config: &ExperimentConfig) -> Self {
        let digest = Sha256::digest(config.to_toml().as_bytes());
        Self {
            kind: config.kind.as_str().to_string(),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            prng: PRNG_ID.to_string(),
            seed: config.seed,
            tables: Vec::new(),
        }
    }
}

/// A series drawn in an optional plot.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub manifest: Manifest,
    pub config: ExperimentConfig,
    pub tables: Vec<Table>,
    pub checks: Vec<CheckResult>,
    pub plots: Vec<PlotSpec>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn checks_table(&self) -> Table {
        let mut t = Table::new("checks", &["check", "passed", "measured", "tolerance", "detail"]);
        for c in &self.checks {
            t.push(vec![
                c.name.as_str().into(),
                c.passed.into(),
                c.measured.into(),
                c.tolerance.into(),
                c.detail.as_str().into(),
            ]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_print_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 2.5e17, -0.0] {
            let s = Value::Float(x).to_string();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(Value::Float(1.0).to_string(), "1.0");
        assert_eq!(Value::Int(-3).to_string(), "-3");
    }

    #[test]
    fn table_columns() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![1usize.into(), 0.5.into()]);
        t.push(vec![2usize.into(), "x".into()]);
        assert_eq!(t.floats("a").unwrap(), vec![1.0, 2.0]);
        assert_eq!(t.floats("b").unwrap(), vec![0.5]);
        assert!(t.column("c").is_none());
    }

    #[test]
    fn at_most_is_inclusive() {
        assert!(CheckResult::at_most("x", 1.0, 1.0, "").passed);
        assert!(!CheckResult::at_most("x", f64::NAN, 1.0, "").passed);
    }
}
