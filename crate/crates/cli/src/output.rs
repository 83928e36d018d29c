use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::CliError;

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    /// Written as an empty CSV field and as JSON `null`.
    Missing,
}

impl Value {
    fn to_field(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) => format!("{v:?}"),
            Value::Bool(v) => v.to_string(),
            Value::Text(v) => v.clone(),
            Value::Missing => String::new(),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::Int(v.into())
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
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

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Missing, Into::into)
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Int(v) => s.serialize_i64(*v),
            Value::Float(v) => s.serialize_f64(*v),
            Value::Bool(v) => s.serialize_bool(*v),
            Value::Text(v) => s.serialize_str(v),
            Value::Missing => s.serialize_none(),
        }
    }
}

/// Column-ordered result table. `schema_version` is always the first column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

struct Record<'a> {
    columns: &'a [&'static str],
    row: &'a [Value],
}

impl Serialize for Record<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.columns.len()))?;
        for (c, v) in self.columns.iter().zip(self.row) {
            map.serialize_entry(c, v)?;
        }
        map.end()
    }
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        let mut all = vec!["schema_version"];
        all.extend_from_slice(columns);
        Self {
            columns: all,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len() + 1, self.columns.len(), "row width");
        let mut full = vec![Value::from(SCHEMA_VERSION)];
        full.extend(row);
        self.rows.push(full);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Value::to_field))?;
        }
        out.flush().map_err(|e| CliError::io("output", e))?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<(), CliError> {
        let records: Vec<Record> = self
            .rows
            .iter()
            .map(|row| Record {
                columns: &self.columns,
                row,
            })
            .collect();
        serde_json::to_writer_pretty(&mut w, &records)?;
        writeln!(w).map_err(|e| CliError::io("output", e))?;
        Ok(())
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        match format {
            Format::Csv => self.write_csv(&mut buf)?,
            Format::Json => self.write_json(&mut buf)?,
        }
        Ok(buf)
    }
}

/// Sidecar describing how an output file was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    /// Subcommand path, e.g. `["sweep", "threshold"]`.
    pub command: Vec<String>,
    /// Flags of the subcommand keyed by long name.
    pub params: serde_json::Map<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub format: Format,
    pub engine_version: String,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn sidecar_path(out: &Path) -> std::path::PathBuf {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        name.into()
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Writes `bytes` to `out` (and the manifest beside it) or to stdout.
pub fn emit(bytes: &[u8], out: Option<&Path>, manifest: &RunManifest) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| CliError::io(path.display().to_string(), e))?;
            let side = RunManifest::sidecar_path(path);
            let mut text = serde_json::to_string_pretty(manifest)?;
            text.push('\n');
            fs::write(&side, text).map_err(|e| CliError::io(side.display().to_string(), e))?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes).map_err(|e| CliError::io("stdout", e))?;
        }
    }
    Ok(())
}
