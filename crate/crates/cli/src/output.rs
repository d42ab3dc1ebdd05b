//! Table writers and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map_or(Cell::Text("none".into()), Cell::Num)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.replace([',', '\n', '\r'], ";"),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(fmt_f64(*v)),
            Cell::Int(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Seventeen significant digits, enough to read back the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Table {
    pub stem: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(stem: &'static str, columns: &[&'static str]) -> Self {
        Table {
            stem,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn config_object(cfg: &RunConfig) -> Map<String, Value> {
    cfg.entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect()
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Write `table` as `<stem>.csv` (with the config as `#` comment lines) or
/// `<stem>.json`.
pub fn write_table(cfg: &RunConfig, table: &Table) -> Result<PathBuf, CliError> {
    match cfg.format {
        Format::Csv => {
            let mut text = String::new();
            for (k, v) in cfg.entries() {
                text.push_str(&format!("# {k} = {v}\n"));
            }
            text.push_str(&table.columns.join(","));
            text.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                text.push_str(&cells.join(","));
                text.push('\n');
            }
            let path = cfg.out.join(format!("{}.csv", table.stem));
            write_file(&path, text.as_bytes())?;
            Ok(path)
        }
        Format::Record => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| Value::Array(row.iter().map(Cell::json).collect()))
                .collect();
            let doc = json!({
                "format": "modelforge.table",
                "version": 1,
                "config": config_object(cfg),
                "columns": table.columns,
                "rows": rows,
            });
            write_json(&cfg.out.join(format!("{}.json", table.stem)), &doc)
        }
    }
}

/// A JSON document with the config attached under `"config"`.
pub fn write_record<T: serde::Serialize>(
    cfg: &RunConfig,
    stem: &str,
    body: &T,
) -> Result<PathBuf, CliError> {
    let body = serde_json::to_value(body).map_err(|e| CliError::Io(e.to_string()))?;
    let doc = json!({ "config": config_object(cfg), "report": body });
    write_json(&cfg.out.join(format!("{stem}.json")), &doc)
}

fn write_json(path: &Path, doc: &Value) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())?;
    Ok(path.to_path_buf())
}

/// `manifest.json`: hashes of every file written, the resolved config and
/// the exit code.
pub fn write_manifest(cfg: &RunConfig, files: &[PathBuf], exit_code: i32) -> Result<PathBuf, CliError> {
    let mut entries = Vec::new();
    let mut sorted = files.to_vec();
    sorted.sort();
    for path in &sorted {
        let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
        let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        entries.push(json!({
            "name": name,
            "bytes": bytes.len(),
            "sha256": hex::encode(Sha256::digest(&bytes)),
        }));
    }
    let doc = json!({
        "tool": "modelforge",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "config": config_object(cfg),
        "exit_code": exit_code,
        "files": entries,
    });
    write_json(&cfg.out.join("manifest.json"), &doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, std::f64::consts::PI, -1e-300, 12345.678, 0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn text_cells_never_need_quotes() {
        assert_eq!(Cell::Text("a,b\nc".into()).csv(), "a;b;c");
        assert_eq!(Cell::opt(None).csv(), "none");
    }
}
