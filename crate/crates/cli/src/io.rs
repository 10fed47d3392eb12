//! File input and output shared by every command.

use crate::args::Format;
use crate::error::{usage, CliError, Result};
use metriq_core::MetricSpace;
use serde::de::DeserializeOwned;
use serde_json::Value;
use std::path::Path;

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

/// A metric document, or a matrix CSV when the extension is `.csv`.
pub fn read_metric(path: &Path) -> Result<MetricSpace> {
    let text = read_text(path)?;
    let m = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) { MetricSpace::from_csv(&text)? } else { MetricSpace::from_json(&text)? };
    Ok(m)
}

/// What a command produced, before formatting.
#[derive(Debug)]
pub enum Output {
    /// A document; CSV output has one row per object, with nested object fields joined by dots
    /// and arrays left out.
    Doc(Value),
    /// A metric; CSV output is its matrix.
    Metric(MetricSpace),
    /// Text already in its final form.
    Text(String),
}

impl Output {
    pub fn doc(v: impl serde::Serialize) -> Result<Self> {
        Ok(Output::Doc(serde_json::to_value(v)?))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match (self, format) {
            (Output::Text(t), _) => Ok(t.clone()),
            (Output::Metric(m), Format::Json) => Ok(m.to_json()? + "\n"),
            (Output::Metric(m), Format::Csv) => Ok(m.to_csv()),
            (Output::Doc(v), Format::Json) => Ok(serde_json::to_string_pretty(v)? + "\n"),
            (Output::Doc(v), Format::Csv) => scalar_row(v),
        }
    }
}

fn csv_field(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some(String::new()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) if s.contains([',', '"', '\n']) => Some(format!("\"{}\"", s.replace('"', "\"\""))),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn flatten(prefix: &str, v: &serde_json::Map<String, Value>, out: &mut Vec<(String, String)>) {
    for (k, x) in v {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match x {
            Value::Object(o) => flatten(&key, o, out),
            _ => {
                if let Some(cell) = csv_field(x) {
                    out.push((key, cell));
                }
            }
        }
    }
}

fn scalar_row(v: &Value) -> Result<String> {
    let objects: Vec<&serde_json::Map<String, Value>> = match v {
        Value::Object(o) => vec![o],
        Value::Array(a) if a.iter().all(Value::is_object) => a.iter().filter_map(Value::as_object).collect(),
        _ => return usage("this output has no tabular form; use --format json"),
    };
    let rows: Vec<Vec<(String, String)>> = objects
        .into_iter()
        .map(|o| {
            let mut r = Vec::new();
            flatten("", o, &mut r);
            r
        })
        .collect();
    let Some(first) = rows.first() else {
        return Ok(String::new());
    };
    let keys: Vec<&str> = first.iter().map(|(k, _)| k.as_str()).collect();
    let mut out = keys.join(",") + "\n";
    for r in &rows {
        let cells: Vec<&str> = keys.iter().map(|k| r.iter().find(|(x, _)| x == k).map_or("", |(_, c)| c.as_str())).collect();
        out += &(cells.join(",") + "\n");
    }
    Ok(out)
}

pub fn emit(out: &Output, format: Format, path: Option<&Path>) -> Result<()> {
    let text = out.render(format)?;
    match path {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
