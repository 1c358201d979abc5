//! Tabular output with an embedded run manifest, rendered as CSV or JSON.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(format_float(*v)),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Shortest round-trip representation in exponent form.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}

/// Provenance of a run, embedded in every output.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub command: String,
    pub input: String,
    pub input_sha256: String,
    pub version: String,
    pub seed: Option<u64>,
    pub tolerances: Vec<(String, f64)>,
    /// Further run parameters in insertion order.
    pub params: Vec<(String, String)>,
    pub wall_clock_s: f64,
}

impl Manifest {
    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.push((key.to_string(), value.to_string()));
    }

    fn lines(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("command".to_string(), self.command.clone()),
            ("input".to_string(), self.input.clone()),
            ("input_sha256".to_string(), self.input_sha256.clone()),
            ("version".to_string(), self.version.clone()),
            ("seed".to_string(), self.seed.map_or("none".to_string(), |s| s.to_string())),
        ];
        for (k, v) in &self.tolerances {
            out.push((format!("tol_{k}"), format_float(*v)));
        }
        out.extend(self.params.iter().cloned());
        out
    }
}

/// Data table with summary footer entries.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub footer: Vec<(String, Cell)>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn footer(&mut self, key: &str, value: impl Into<Cell>) {
        self.footer.push((key.to_string(), value.into()));
    }

    pub fn footer_value(&self, key: &str) -> Option<&Cell> {
        self.footer.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

/// Manifest plus table.
#[derive(Debug, Clone)]
pub struct Report {
    pub manifest: Manifest,
    pub table: Table,
}

impl Report {
    /// CSV with `#`-prefixed manifest header lines; footer entries follow the
    /// data as `# key: value` lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.manifest.lines() {
            let _ = writeln!(s, "# {k}: {v}");
        }
        let _ = writeln!(s, "# wall_clock_s: {:.3}", self.manifest.wall_clock_s);
        let _ = writeln!(s, "{}", self.table.columns.join(","));
        for row in &self.table.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        for (k, v) in &self.table.footer {
            let _ = writeln!(s, "# {k}: {}", v.csv());
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut manifest = Map::new();
        for (k, v) in self.manifest.lines() {
            manifest.insert(k, Value::String(v));
        }
        manifest.insert("wall_clock_s".into(), json!(self.manifest.wall_clock_s));
        let rows: Vec<Value> = self
            .table
            .rows
            .iter()
            .map(|r| Value::Object(self.table.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
            .collect();
        let footer: Map<String, Value> = self.table.footer.iter().map(|(k, v)| (k.clone(), v.json())).collect();
        let doc = json!({ "manifest": manifest, "columns": self.table.columns, "rows": rows, "summary": footer });
        let mut out = serde_json::to_string_pretty(&doc).expect("serializable");
        out.push('\n');
        out
    }
}

/// Lines of a CSV rendering that carry data, i.e. everything except the
/// wall-clock entry.
pub fn data_section(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with("# wall_clock_s:")).map(|l| format!("{l}\n")).collect()
}
