//! Report serialization and atomic output.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::CliError;
use crate::run::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub fn to_json(report: &Report) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        // matrices and trajectories are left to the JSON report
        Value::Array(_) => {}
        other => out.push((prefix.to_string(), cell(other))),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(_) | Value::Object(_) => serde_json::to_string(v).unwrap_or_default(),
        other => other.to_string(),
    }
}

fn row_cells(row: &Map<String, Value>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (k, v) in row {
        match v {
            Value::Object(_) => flatten(k, v, &mut out),
            other => out.push((k.clone(), cell(other))),
        }
    }
    out
}

/// Sweep reports give one row per grid cell; other reports give one
/// `field,value` row per scalar.
pub fn to_csv(report: &Report) -> Result<String, CliError> {
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    if report.rows.is_empty() {
        let mut fields = Vec::new();
        flatten("", &serde_json::to_value(report).map_err(|e| CliError::Io(e.to_string()))?, &mut fields);
        w.write_record(["field", "value"]).map_err(io)?;
        for (k, v) in fields {
            w.write_record([k, v]).map_err(io)?;
        }
    } else {
        let rows: Vec<Vec<(String, String)>> = report.rows.iter().map(row_cells).collect();
        let mut header: Vec<String> = Vec::new();
        for r in &rows {
            for (k, _) in r {
                if !header.contains(k) {
                    header.push(k.clone());
                }
            }
        }
        w.write_record(&header).map_err(io)?;
        for r in &rows {
            let line: Vec<&str> = header
                .iter()
                .map(|h| r.iter().find(|(k, _)| k == h).map(|(_, v)| v.as_str()).unwrap_or(""))
                .collect();
            w.write_record(line).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

pub fn render(report: &Report, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(report),
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place. With `no_clobber` an existing file is an error.
pub fn emit_report(report: &Report, format: Format, path: &Path, no_clobber: bool) -> Result<(), CliError> {
    let text = render(report, format)?;
    if no_clobber && path.exists() {
        return Err(CliError::Io(format!("{} exists", path.display())));
    }
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    if no_clobber {
        tmp.persist_noclobber(path).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    } else {
        tmp.persist(path).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    }
    Ok(())
}
