//! Sample files and tabular output.
//!
//! Floats are written with 17 significant digits so that files round-trip
//! bit for bit. CSV and JSON renderings of a [`Table`] come from the same
//! cells and therefore carry identical numbers.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use serde_json::{json, Map, Value};

use crate::AppError;

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Num(f64),
    Int(i64),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) if s.contains(',') || s.contains('"') => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Str(s) => s.clone(),
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => Value::String(s.clone()),
            // Strings keep the exact CSV digits and allow NaN.
            Cell::Num(v) => Value::String(fmt_f64(*v)),
            Cell::Int(v) => json!(v),
            Cell::Missing => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Rows as objects. Floats are strings in the same 17-digit form as the
    /// CSV so that both renderings hold identical values.
    pub fn to_json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    for (c, v) in self.columns.iter().zip(r) {
                        m.insert(c.clone(), v.json());
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Renders a table with a reproducibility header: `# key=value` comment
/// lines for CSV, a `header` object for JSON.
pub fn render(table: &Table, header: &[(String, String)], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut out = String::new();
            for (k, v) in header {
                for (i, line) in v.lines().enumerate() {
                    if i == 0 {
                        let _ = writeln!(out, "# {k}={line}");
                    } else {
                        let _ = writeln!(out, "#   {line}");
                    }
                }
            }
            out.push_str(&table.to_csv());
            out
        }
        OutputFormat::Json => {
            let mut h = Map::new();
            for (k, v) in header {
                h.insert(k.clone(), Value::String(v.clone()));
            }
            let doc = json!({ "header": Value::Object(h), "rows": table.to_json_rows() });
            let mut s = serde_json::to_string_pretty(&doc).expect("JSON serialization");
            s.push('\n');
            s
        }
    }
}

/// Writes a sample file: comment header, then one value per line.
pub fn write_sample<W: Write>(mut w: W, values: &[f64], header: &[(String, String)]) -> io::Result<()> {
    let line: Vec<String> = header.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(w, "# {}", line.join(", "))?;
    for v in values {
        writeln!(w, "{}", fmt_f64(*v))?;
    }
    Ok(())
}

/// Parsed sample file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleFile {
    pub values: Vec<f64>,
    /// `key=value` pairs found in `#` comment lines.
    pub header: Vec<(String, String)>,
}

impl SampleFile {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Reads one value per line; `#` lines and blank lines are skipped. The
/// first whitespace- or comma-separated token of each data line is used.
pub fn read_sample<R: BufRead>(r: R) -> Result<SampleFile, AppError> {
    let mut out = SampleFile::default();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(AppError::Io)?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(c) = t.strip_prefix('#') {
            for part in c.split(", ") {
                if let Some((k, v)) = part.split_once('=') {
                    out.header.push((k.trim().to_string(), v.trim().to_string()));
                }
            }
            continue;
        }
        let tok = t.split(|c: char| c.is_whitespace() || c == ',').next().unwrap_or(t);
        let v: f64 = tok
            .parse()
            .map_err(|_| AppError::Data(format!("line {}: `{tok}` is not a number", lineno + 1)))?;
        if v.is_nan() {
            return Err(AppError::Data(format!("line {}: NaN value", lineno + 1)));
        }
        out.values.push(v);
    }
    if out.values.is_empty() {
        return Err(AppError::Data("sample file holds no values".into()));
    }
    Ok(out)
}
