//! Report emission: one JSON object per line, or a CSV header and row.

use std::io::{self, Write};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

pub fn emit(report: &impl Serialize, format: Format) -> io::Result<()> {
    let mut out = io::stdout().lock();
    match format {
        Format::Json => {
            serde_json::to_writer(&mut out, report)?;
            writeln!(out)
        }
        Format::Csv => {
            let value = serde_json::to_value(report)?;
            let mut columns = Vec::new();
            flatten("", &value, &mut columns);
            let mut w = csv::Writer::from_writer(out);
            w.write_record(columns.iter().map(|(k, _)| k))?;
            w.write_record(columns.iter().map(|(_, v)| v))?;
            w.flush()
        }
    }
}

/// Nested objects become dotted column names; arrays are joined with ';'.
fn flatten(prefix: &str, value: &Value, columns: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => flatten_map(prefix, map, columns),
        other => columns.push((prefix.to_string(), cell(other))),
    }
}

fn flatten_map(prefix: &str, map: &Map<String, Value>, columns: &mut Vec<(String, String)>) {
    for (k, v) in map {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        flatten(&key, v, columns);
    }
}

fn cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}
