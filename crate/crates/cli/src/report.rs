//! Report assembly and emission.

use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Version of the report schema.
pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub level: Level,
    pub kind: String,
    pub message: String,
}

impl Diagnostic {
    pub fn warning(kind: &str, message: impl Into<String>) -> Self {
        Self {
            level: Level::Warning,
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn error(e: &CliError) -> Self {
        Self {
            level: Level::Error,
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }

    fn to_value(&self) -> Value {
        json!({
            "level": match self.level { Level::Warning => "warning", Level::Error => "error" },
            "kind": self.kind,
            "message": self.message,
        })
    }
}

/// Rows for CSV output. Cells are JSON scalars so floats share the JSON formatting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub version: String,
    pub config_echo: RunConfig,
    pub results: Value,
    pub diagnostics: Vec<Diagnostic>,
    pub table: Table,
    /// Eigenvalue-vs-path-parameter data, spectral flow only.
    pub plot: Option<Table>,
    pub exit_code: i32,
}

impl Report {
    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("version".into(), json!(self.version));
        m.insert("command".into(), json!(self.config_echo.command.name()));
        m.insert(
            "config_echo".into(),
            serde_json::to_value(&self.config_echo).unwrap_or(Value::Null),
        );
        m.insert("results".into(), self.results.clone());
        m.insert(
            "diagnostics".into(),
            Value::Array(self.diagnostics.iter().map(Diagnostic::to_value).collect()),
        );
        Value::Object(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = String::new();
        write_json(&self.to_value(), 0, &mut s);
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        table_csv(&self.table)
    }
}

/// 17 significant digits, scientific notation; non-finite values become `null`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) if !n.is_f64() => i.to_string(),
            (_, Some(u), _) if !n.is_f64() => u.to_string(),
            (_, _, Some(f)) => format_float(f),
            _ => n.to_string(),
        },
        Value::String(s) => serde_json::to_string(s).unwrap_or_default(),
        Value::Bool(b) => b.to_string(),
        Value::Null => "null".into(),
        _ => unreachable!(),
    }
}

/// Pretty JSON with two-space indentation and fixed float formatting.
pub fn write_json(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize, out: &mut String| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Object(o) if o.is_empty() => out.push_str("{}"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                pad(indent + 2, out);
                write_json(x, indent + 2, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(o) => {
            out.push_str("{\n");
            for (i, (k, x)) in o.iter().enumerate() {
                pad(indent + 2, out);
                out.push_str(&serde_json::to_string(k).unwrap_or_default());
                out.push_str(": ");
                write_json(x, indent + 2, out);
                out.push_str(if i + 1 < o.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
        _ => out.push_str(&scalar(v)),
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        Value::Array(_) | Value::Object(_) => {
            let mut s = String::new();
            write_json(v, 0, &mut s);
            s
        }
        _ => scalar(v),
    }
}

pub fn table_csv(t: &Table) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&t.header).map_err(io)?;
    for row in &t.rows {
        w.write_record(row.iter().map(csv_cell)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// `<dir>/<stem>.plot.csv` next to the report.
pub fn plot_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    out.with_file_name(format!("{stem}.plot.csv"))
}

/// Writes the report (and plot data, if any) to `path`, or to standard output for `"-"`.
pub fn emit_report(r: &Report, format: Format, path: &str) -> Result<(), CliError> {
    let body = match format {
        Format::Json => r.to_json(),
        Format::Csv => r.to_csv()?,
    };
    if path == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(body.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
        out.flush().map_err(|e| CliError::Io(e.to_string()))?;
        return Ok(());
    }
    let p = Path::new(path);
    write_atomic(p, &body)?;
    if let Some(plot) = &r.plot {
        write_atomic(&plot_path(p), &table_csv(plot)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(format_float(4.0), "4.0000000000000000e0");
        assert_eq!(format_float(-0.001), "-1.0000000000000000e-3");
        assert_eq!(format_float(f64::NAN), "null");
        let x = 0.1 + 0.2;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn writer_keeps_order_and_integers() {
        let v = json!({"b": 1, "a": [1.5, "x", null], "c": {}});
        let mut s = String::new();
        write_json(&v, 0, &mut s);
        assert_eq!(
            s,
            "{\n  \"b\": 1,\n  \"a\": [\n    1.5000000000000000e0,\n    \"x\",\n    null\n  ],\n  \"c\": {}\n}"
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"][0], json!(1.5));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = Table::new(&["label", "value"]);
        t.push(vec![json!("(1/5,2/5)"), json!(0.25)]);
        t.push(vec![json!("(2/5,4/5)"), json!(-1)]);
        let s = table_csv(&t).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines, ["label,value", "\"(1/5,2/5)\",2.5000000000000000e-1", "\"(2/5,4/5)\",-1"]);
    }

    #[test]
    fn plot_path_sits_next_to_report() {
        assert_eq!(plot_path(Path::new("/tmp/x/run.json")), PathBuf::from("/tmp/x/run.plot.csv"));
    }
}
