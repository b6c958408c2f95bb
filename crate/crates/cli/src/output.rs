use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl Cell {
    /// 17 significant digits, so every value round-trips exactly.
    fn to_csv(self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format!("{v:.16e}"),
        }
    }

    fn to_json(self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Real(v) => json!(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, headers: &[&'static str]) -> Self {
        Table {
            name,
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    fn write(&self, path: &Path, format: Format) -> Result<(), CliError> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
                w.write_record(&self.headers).map_err(|e| CliError::io(path, e))?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|c| c.to_csv())).map_err(|e| CliError::io(path, e))?;
                }
                w.flush().map_err(|e| CliError::io(path, e))
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        Value::Object(
                            self.headers
                                .iter()
                                .zip(row)
                                .map(|(h, c)| (h.to_string(), c.to_json()))
                                .collect::<Map<_, _>>(),
                        )
                    })
                    .collect();
                write_json(path, &Value::Array(rows))
            }
        }
    }
}

/// Everything needed to rerun a command and identify its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub parameters: Value,
    pub seed: u64,
    pub format: Format,
    pub artifacts: Vec<String>,
    pub tool_version: &'static str,
}

/// Results of one subcommand, before they are written.
pub struct Report {
    pub summary: Value,
    pub tables: Vec<Table>,
    pub documents: Vec<(&'static str, Value)>,
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes tables, documents, `summary.json` and `manifest.json` into `out`.
/// Returns the written paths.
pub fn write_report(
    out: &Path,
    format: Format,
    subcommand: &'static str,
    parameters: Value,
    seed: u64,
    report: Report,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut artifacts: Vec<String> = report
        .tables
        .iter()
        .map(|t| format!("{}.{}", t.name, format.extension()))
        .collect();
    artifacts.extend(report.documents.iter().map(|(name, _)| format!("{name}.json")));
    artifacts.push("summary.json".into());

    let manifest = RunManifest {
        subcommand,
        parameters,
        seed,
        format,
        artifacts: artifacts.clone(),
        tool_version: env!("CARGO_PKG_VERSION"),
    };
    let manifest = serde_json::to_value(&manifest).expect("manifest serializes");

    let mut written = Vec::new();
    for table in &report.tables {
        let path = out.join(format!("{}.{}", table.name, format.extension()));
        table.write(&path, format)?;
        written.push(path);
    }
    for (name, doc) in &report.documents {
        let path = out.join(format!("{name}.json"));
        write_json(&path, doc)?;
        written.push(path);
    }
    let mut summary = report.summary;
    if let Value::Object(map) = &mut summary {
        map.insert("manifest".into(), manifest.clone());
    }
    let path = out.join("summary.json");
    write_json(&path, &summary)?;
    written.push(path);
    let path = out.join("manifest.json");
    write_json(&path, &manifest)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_keep_seventeen_digits() {
        assert_eq!(Cell::Real(0.1).to_csv(), "1.0000000000000001e-1");
        assert_eq!(Cell::Real(1.0).to_csv(), "1.0000000000000000e0");
        let back: f64 = Cell::Real(std::f64::consts::PI).to_csv().parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn ints_are_plain() {
        assert_eq!(Cell::from(7u32).to_csv(), "7");
    }
}
