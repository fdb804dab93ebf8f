//! CSV tables and their metadata sidecars.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::float;

/// A header plus rows of already formatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    #[must_use]
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Index of a named column.
    #[must_use]
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let wrap = |e: csv::Error| Error::Numeric(format!("csv write failed: {e}"));
        w.write_record(&self.header).map_err(wrap)?;
        for r in &self.rows {
            w.write_record(r).map_err(wrap)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Numeric(e.to_string()))
    }
}

/// Cell for a float.
#[must_use]
pub fn cell(x: f64) -> String {
    float(x)
}

/// Cell for an optional float; empty when absent.
#[must_use]
pub fn opt_cell(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Provenance written next to every CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: &'static str,
    /// Experiment-specific notes such as histogram settings.
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub notes: serde_json::Map<String, serde_json::Value>,
}

impl Metadata {
    #[must_use]
    pub fn new(experiment: &str, config_sha256: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            config_sha256: config_sha256.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION"),
            notes: serde_json::Map::new(),
        }
    }

    #[must_use]
    pub fn with_note(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.notes.insert(key.to_string(), v);
        self
    }
}

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.meta.json`; returns the CSV path.
pub fn write_table(dir: &Path, stem: &str, table: &Table, meta: &Metadata) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, table.to_csv_string()?).map_err(|e| Error::io(&csv_path, e))?;
    write_meta(dir, stem, meta)?;
    Ok(csv_path)
}

/// Writes only the `<stem>.meta.json` sidecar.
pub fn write_meta(dir: &Path, stem: &str, meta: &Metadata) -> Result<()> {
    let meta_path = dir.join(format!("{stem}.meta.json"));
    let text = serde_json::to_string_pretty(meta).map_err(|e| Error::Numeric(e.to_string()))?;
    std::fs::write(&meta_path, text + "\n").map_err(|e| Error::io(&meta_path, e))
}
