use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::field::csv_error;

/// Column-ordered result table shared by the CSV and JSON outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Float cell; non-finite values become null.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

pub fn opt_bool(v: Option<bool>) -> Value {
    v.map_or(Value::Null, Value::Bool)
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct Report {
    pub table: Table,
    /// Mode-specific extras for the JSON document.
    pub summary: Value,
    /// Whether every checked verification row passed.
    pub passed: bool,
    /// Extra binary artifacts as `(file name, bytes)`.
    pub artifacts: Vec<(String, Vec<u8>)>,
}

impl Report {
    pub fn new(table: Table) -> Self {
        Report { table, summary: Value::Null, passed: true, artifacts: Vec::new() }
    }
}

pub fn write_csv<W: Write>(config: &ExperimentConfig, table: &Table, mut w: W) -> Result<()> {
    writeln!(w, "# fielddev mode={} config_sha256={} seed={}", config.mode.as_str(), config.hash(), config.seed)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(&table.columns).map_err(csv_error)?;
    for row in &table.rows {
        out.write_record(row.iter().map(cell_text)).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn json_document(config: &ExperimentConfig, report: &Report) -> Value {
    json!({
        "tool": "fielddev",
        "version": env!("CARGO_PKG_VERSION"),
        "mode": config.mode.as_str(),
        "config_sha256": config.hash(),
        "seed": config.seed,
        "config": config,
        "columns": report.table.columns,
        "rows": report.table.rows,
        "summary": report.summary,
        "passed": report.passed,
    })
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes `<prefix><mode>.csv`, `<prefix><mode>.json` and any artifacts
/// into `dir`, each through a temporary file and a rename.
pub fn emit_report(config: &ExperimentConfig, report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut csv_bytes = Vec::new();
    write_csv(config, &report.table, &mut csv_bytes)?;
    let mut json_bytes = serde_json::to_vec_pretty(&json_document(config, report)).expect("report serializes");
    json_bytes.push(b'\n');
    std::fs::create_dir_all(dir)?;
    let stem = format!("{}{}", config.output.prefix, config.mode.as_str());
    let mut written = Vec::new();
    for (name, bytes) in [(format!("{stem}.csv"), &csv_bytes), (format!("{stem}.json"), &json_bytes)]
        .into_iter()
        .chain(report.artifacts.iter().map(|(n, b)| (format!("{}{n}", config.output.prefix), b)))
    {
        let path = dir.join(name);
        atomic_write(&path, bytes)?;
        written.push(path);
    }
    Ok(written)
}
