//! Tables, CSV/JSON rendering and run manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

/// Seventeen significant digits in scientific notation, which round-trips
/// every `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header plus one line per row, LF-terminated.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Array of row objects keyed by column name.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    for (c, v) in self.columns.iter().zip(row) {
                        m.insert((*c).to_string(), v.json());
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

pub fn to_pretty_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write `{}`: {e}", path.display())))
}

/// `<path>.<suffix>`, keeping the original extension.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

/// Record of one run, written next to every output file.
#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub params: Value,
    /// Arguments after the program name; re-running them reproduces the
    /// outputs byte for byte.
    pub args: Vec<String>,
    pub outputs: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_fixed_width_scientific() {
        assert_eq!(format_float(0.3), "2.9999999999999999e-1");
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(-0.05), "-5.0000000000000003e-2");
        for v in [0.1, 1.0 / 3.0, 6.02e23, -1e-300] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_and_json() {
        let mut t = Table::new(vec!["z", "cdf", "note"]);
        t.push(vec![Cell::Float(0.5), Cell::Int(3), Cell::Empty]);
        assert_eq!(t.to_csv(), "z,cdf,note\n5.0000000000000000e-1,3,\n");
        assert_eq!(t.to_json(), serde_json::json!([{"z": 0.5, "cdf": 3, "note": null}]));
        assert_eq!(Table::new(vec!["value"]).to_csv(), "value\n");
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("out/a.csv"), "manifest.json"), PathBuf::from("out/a.csv.manifest.json"));
    }
}
