//! CSV tables, the flat summary object and their staged write-out.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::CliError;

pub const SUMMARY_FILE: &str = "summary.json";

/// A CSV curve. Floats use the shortest round-trip representation (`{:?}`),
/// switching to exponent notation for very large or small magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(file_name: &str, header: &[&str]) -> Self {
        Self {
            file_name: file_name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{x:?}").expect("writing to a String cannot fail");
            }
            out.push('\n');
        }
        out
    }
}

/// Flat key → scalar map; keys serialize in sorted order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary(BTreeMap<String, Value>);

impl Summary {
    /// Non-finite values become `null`.
    pub fn num(&mut self, key: &str, x: f64) {
        let v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        self.0.insert(key.to_string(), v);
    }

    pub fn opt(&mut self, key: &str, x: Option<f64>) {
        self.num(key, x.unwrap_or(f64::NAN));
    }

    pub fn int(&mut self, key: &str, n: usize) {
        self.0.insert(key.to_string(), Value::from(n));
    }

    pub fn flag(&mut self, key: &str, b: bool) {
        self.0.insert(key.to_string(), Value::Bool(b));
    }

    pub fn text(&mut self, key: &str, s: &str) {
        self.0.insert(key.to_string(), Value::String(s.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.0.get(key).and_then(Value::as_f64)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.0).expect("summary values are plain scalars");
        s.push('\n');
        s
    }
}

/// Everything a scenario writes.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub summary: Summary,
}

impl Artifacts {
    /// `(file name, contents)` in write order, summary last.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> =
            self.tables.iter().map(|t| (t.file_name.clone(), t.to_csv())).collect();
        out.push((SUMMARY_FILE.to_string(), self.summary.to_json()));
        out
    }

    /// Stages every file in a fresh directory inside `dir`, then renames them
    /// into place. A failure before the renames leaves `dir` untouched.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let staging = tempfile::Builder::new()
            .prefix(".decolab-staging-")
            .tempdir_in(dir)
            .map_err(|e| CliError::io(dir, e))?;
        let files = self.files();
        for (name, contents) in &files {
            let path = staging.path().join(name);
            std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        }
        let mut written = Vec::with_capacity(files.len());
        for (name, _) in &files {
            let target = dir.join(name);
            std::fs::rename(staging.path().join(name), &target).map_err(|e| CliError::io(&target, e))?;
            written.push(target);
        }
        Ok(written)
    }
}
