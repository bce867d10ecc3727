//! Flat result tables written as CSV or as versioned JSON.

use std::io::Write;

use anyhow::Context;
use serde_json::{json, Map, Value};

/// Version of the JSON output layout.
pub const SCHEMA: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    /// 17 significant digits in exponent form, independent of locale.
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Num(x) => format!("{x}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(x.to_string()),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_owned())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// One-row table from `(column, value)` pairs.
    pub fn record(pairs: Vec<(&'static str, Cell)>) -> Self {
        let (columns, row): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        Self { columns, rows: vec![row] }
    }

    pub fn write_csv(&self, out: impl Write) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush().context("writing CSV")?;
        Ok(())
    }

    pub fn to_json(&self, command: &str, seed: u64) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(c, v)| ((*c).to_owned(), v.json())).collect();
                Value::Object(obj)
            })
            .collect();
        json!({ "schema": SCHEMA, "command": command, "seed": seed, "rows": rows })
    }

    pub fn write_json(&self, command: &str, seed: u64, mut out: impl Write) -> anyhow::Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json(command, seed))?;
        writeln!(out)?;
        Ok(())
    }
}
