//! Tabular run output with CSV, JSON and metadata writers.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::config::TableKind;
use crate::error::{CliError, Result};

/// One table cell. Numbers print with ten decimals.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn num(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Num(v) => Some(v),
            Cell::Int(v) => Some(v as f64),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.10}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Num(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Num(v) => s.serialize_str(&v.to_string()),
            Cell::Int(v) => s.serialize_u64(*v),
            Cell::Text(t) => s.serialize_str(t),
            Cell::Empty => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Row {
    pub cells: Vec<Cell>,
    /// Failures of any method on this row, joined.
    pub error: Option<String>,
    /// Wall-clock seconds per method; kept out of the CSV so reruns match.
    pub seconds: BTreeMap<String, f64>,
}

impl Row {
    pub fn record_error(&mut self, what: &str, err: impl std::fmt::Display) {
        let msg = format!("{what}: {err}");
        self.error = Some(match self.error.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub table: TableKind,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub metadata: BTreeMap<String, Value>,
}

struct RowView<'a> {
    columns: &'a [String],
    row: &'a Row,
}

impl Serialize for RowView<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.columns.len() + 1))?;
        for (c, v) in self.columns.iter().zip(&self.row.cells) {
            map.serialize_entry(c, v)?;
        }
        map.serialize_entry("error", &self.row.error)?;
        map.end()
    }
}

/// Files written for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub metadata: PathBuf,
}

impl RunReport {
    pub fn new(table: TableKind, columns: Vec<String>) -> Self {
        Self {
            table,
            columns,
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Value of column `name` in row `row`, if numeric.
    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        let c = self.column(name)?;
        self.rows.get(row)?.cells.get(c)?.as_f64()
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metadata.insert(key.to_string(), v);
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.columns.clone();
        header.push("error".into());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.cells.iter().map(Cell::render).collect();
            rec.push(row.error.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: "csv output".into(),
            source,
        })?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<RowView> = self
            .rows
            .iter()
            .map(|row| RowView {
                columns: &self.columns,
                row,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&rows)?)
    }

    /// Run metadata plus the wall-clock seconds of every row and a
    /// timestamp; the only output that differs between identical runs.
    pub fn metadata_json(&self) -> Result<String> {
        let mut meta = self.metadata.clone();
        let seconds: Vec<&BTreeMap<String, f64>> = self.rows.iter().map(|r| &r.seconds).collect();
        meta.insert("row_seconds".into(), serde_json::to_value(seconds)?);
        meta.insert("failed_rows".into(), self.failures().into());
        let stamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        meta.insert("timestamp_unix".into(), stamp.into());
        Ok(serde_json::to_string_pretty(&meta)?)
    }

    /// Writes `<table>.csv`, `<table>.json` and `<table>.metadata.json`.
    pub fn write_to(&self, dir: &Path) -> Result<OutputFiles> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| CliError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let name = self.table.name();
        let files = OutputFiles {
            csv: dir.join(format!("{name}.csv")),
            json: dir.join(format!("{name}.json")),
            metadata: dir.join(format!("{name}.metadata.json")),
        };
        let mut csv = Vec::new();
        self.write_csv(&mut csv)?;
        std::fs::write(&files.csv, csv).map_err(io(&files.csv))?;
        std::fs::write(&files.json, self.to_json()? + "\n").map_err(io(&files.json))?;
        std::fs::write(&files.metadata, self.metadata_json()? + "\n")
            .map_err(io(&files.metadata))?;
        Ok(files)
    }
}

/// `Δ(A, B) = (B - A) / A` in percent.
pub fn delta_percent(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if a != 0.0 => Some(100.0 * (b - a) / a),
        _ => None,
    }
}
