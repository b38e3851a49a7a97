//! Flat tables written as CSV (17 significant digits) or JSON.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
    S(String),
    Null,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) => format_float(*x),
            Cell::I(i) => i.to_string(),
            Cell::B(b) => b.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::I(i) => Value::from(*i),
            Cell::B(b) => Value::from(*b),
            Cell::S(s) => Value::from(s.as_str()),
            Cell::Null => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Null, Cell::F)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::I(i64::from(x))
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<Option<u32>> for Cell {
    fn from(x: Option<u32>) -> Self {
        x.map_or(Cell::Null, Cell::from)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x + 0.0)
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Default)]
pub struct Row(Vec<(String, Cell)>);

impl Row {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, key: impl Into<String>, value: impl Into<Cell>) -> Self {
        self.0.push((key.into(), value.into()));
        self
    }
}

#[derive(Debug, Default)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn push(&mut self, row: Row) {
        if self.rows.is_empty() && self.columns.is_empty() {
            self.columns = row.0.iter().map(|(k, _)| k.clone()).collect();
        }
        debug_assert_eq!(
            self.columns,
            row.0.iter().map(|(k, _)| k.clone()).collect::<Vec<_>>(),
            "rows must share columns"
        );
        self.rows.push(row.0.into_iter().map(|(_, v)| v).collect());
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if !self.columns.is_empty() {
            w.write_record(&self.columns)
                .map_err(|e| CliError::io(e.to_string()))?;
        }
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))
                .map_err(|e| CliError::io(e.to_string()))?;
        }
        w.into_inner().map_err(|e| CliError::io(e.to_string()))
    }

    pub fn to_json(&self, meta: Value) -> CliResult<Vec<u8>> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (k, v) in self.columns.iter().zip(row) {
                    m.insert(k.clone(), v.json());
                }
                Value::Object(m)
            })
            .collect();
        let mut top = Map::new();
        top.insert("meta".into(), meta);
        top.insert("rows".into(), Value::Array(rows));
        let mut out = serde_json::to_vec_pretty(&Value::Object(top))
            .map_err(|e| CliError::io(e.to_string()))?;
        out.push(b'\n');
        Ok(out)
    }
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, bytes)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(format!("cannot write to stdout: {e}")))
        }
    }
}
