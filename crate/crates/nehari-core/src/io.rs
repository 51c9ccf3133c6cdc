//! Deterministic report serialization.
//!
//! Every float is printed with 17 significant digits (`{:.16e}`), which
//! round-trips f64 exactly, so identical inputs yield byte-identical files.
//! JSON objects are written with sorted keys via `serde_json::Value`.

use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;

/// 17-significant-digit rendering of a float. Round-trips f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes any value to JSON with 17-digit floats and 2-space indentation.
pub fn to_json_string(value: &impl Serialize) -> String {
    let v = serde_json::to_value(value).expect("report serialization cannot fail");
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let _ = write!(out, "{}", fmt_f64(n.as_f64().unwrap()));
            }
        }
        Value::String(s) => {
            let _ = write!(out, "{}", Value::String(s.clone()));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, item, level + 1);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let last = map.len() - 1;
            for (k, (key, item)) in map.iter().enumerate() {
                indent(out, level + 1);
                let _ = write!(out, "{}: ", Value::String(key.clone()));
                write_value(out, item, level + 1);
                if k < last {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(out, level);
            out.push('}');
        }
    }
}

/// One CSV cell; floats go through [`fmt_f64`].
#[derive(Debug, Clone)]
pub enum CsvCell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for CsvCell {
    fn from(v: f64) -> Self {
        CsvCell::Float(v)
    }
}

impl From<i64> for CsvCell {
    fn from(v: i64) -> Self {
        CsvCell::Int(v)
    }
}

impl From<&str> for CsvCell {
    fn from(v: &str) -> Self {
        CsvCell::Text(v.to_string())
    }
}

/// Renders a CSV table with a header row.
pub fn csv_table(header: &[&str], rows: &[Vec<CsvCell>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                CsvCell::Int(i) => i.to_string(),
                CsvCell::Float(v) => fmt_f64(*v),
                CsvCell::Text(s) => s.clone(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
