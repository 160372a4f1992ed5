//! CSV tables and the JSON run summary.

use crate::config::ScenarioConfig;
use anyhow::{Context, Result};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().context("flushing CSV buffer")
    }
}

/// Everything a scenario produces.
#[derive(Debug, Default)]
pub struct Report {
    pub tables: Vec<(String, Table)>,
    pub blobs: Vec<(String, Vec<u8>)>,
    pub outputs: Map<String, Value>,
    pub checks: BTreeMap<String, bool>,
}

impl Report {
    pub fn table(&mut self, file: impl Into<String>, table: Table) {
        self.tables.push((file.into(), table));
    }

    pub fn output(&mut self, key: &str, value: impl Into<Value>) {
        self.outputs.insert(key.to_owned(), value.into());
    }

    pub fn check(&mut self, key: &str, passed: bool) {
        self.checks.insert(key.to_owned(), passed);
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.values().all(|&p| p)
    }
}

/// JSON number for finite values and `null` otherwise.
pub fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn numbers(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| number(v)).collect())
}

pub fn config_hash(config: &ScenarioConfig) -> String {
    hex::encode(Sha256::digest(config.canonical_text().as_bytes()))
}

/// Write tables, binary records and `summary.json` into `dir`, returning the
/// summary path.
pub fn write_artifacts(dir: &Path, config: &ScenarioConfig, report: &Report, wall_time_s: f64) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut files = Vec::new();
    for (name, table) in &report.tables {
        let path = dir.join(name);
        fs::write(&path, table.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
        files.push(Value::from(name.as_str()));
    }
    for (name, bytes) in &report.blobs {
        let path = dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        files.push(Value::from(name.as_str()));
    }
    let mut outputs = report.outputs.clone();
    outputs.insert("files".into(), Value::Array(files));
    let summary = json!({
        "scenario": config.scenario.name(),
        "config_hash": config_hash(config),
        "seed": config.seed,
        "outputs": outputs,
        "checks": report.checks,
        "wall_time_s": wall_time_s,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config.canonical_text(),
    });
    let path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
