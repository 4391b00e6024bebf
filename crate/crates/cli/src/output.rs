//! Tables rendered as CSV with a `#` header block, or as JSON columns.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// `key: value` lines emitted after the rows (CSV) or under `summary` (JSON).
    pub summary: Vec<(String, String)>,
    /// Extra JSON-only payload.
    pub extra: Map<String, Value>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.summary.push((key.to_string(), value.into()));
    }
}

/// Shortest round-trip digits at full precision, otherwise `digits`
/// significant figures in exponent form.
pub fn format_float(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    if digits >= 17 {
        let a = x.abs();
        if a == 0.0 || (1e-5..1e16).contains(&a) {
            format!("{x}")
        } else {
            format!("{x:e}")
        }
    } else {
        format!("{:.*e}", digits.saturating_sub(1), x)
    }
}

fn render_cell(cell: &Cell, digits: usize) -> String {
    match cell {
        Cell::Int(i) => i.to_string(),
        Cell::Float(x) => format_float(*x, digits),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

fn json_cell(cell: &Cell, digits: usize) -> Value {
    match cell {
        Cell::Int(i) => json!(i),
        Cell::Float(x) if x.is_finite() => {
            let rounded: f64 = format_float(*x, digits).parse().unwrap_or(*x);
            json!(rounded)
        }
        Cell::Float(_) => Value::Null,
        Cell::Text(s) => json!(s),
    }
}

pub fn render(table: &Table, command: &str, cfg: &RunConfig) -> String {
    let digits = cfg.output.precision;
    match cfg.output.format {
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!("# polylie {}\n", env!("CARGO_PKG_VERSION")));
            out.push_str(&format!("# command: {command}\n"));
            out.push_str(&format!("# config: {}\n", cfg.to_json_line()));
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|c| render_cell(c, digits)).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            for (k, v) in &table.summary {
                out.push_str(&format!("# {k}: {v}\n"));
            }
            out
        }
        Format::Json => {
            let mut data = Map::new();
            for (j, name) in table.columns.iter().enumerate() {
                let col: Vec<Value> = table.rows.iter().map(|r| json_cell(&r[j], digits)).collect();
                data.insert(name.clone(), Value::Array(col));
            }
            let summary: Map<String, Value> = table.summary.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            let mut doc = Map::new();
            doc.insert("tool".into(), json!("polylie"));
            doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
            doc.insert("command".into(), json!(command));
            doc.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
            doc.insert("columns".into(), json!(table.columns));
            doc.insert("data".into(), Value::Object(data));
            doc.insert("summary".into(), Value::Object(summary));
            for (k, v) in &table.extra {
                doc.insert(k.clone(), v.clone());
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json renders");
            s.push('\n');
            s
        }
    }
}

pub fn emit(text: &str, cfg: &RunConfig) -> std::io::Result<()> {
    match &cfg.output.path {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}
