//! Tabular results and their CSV / JSON-record renderings.

use std::path::Path;

use serde_json::{json, Value};

use super::config::OutputFormat;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Missing,
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

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Float)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: &'static str,
    pub unit: Option<&'static str>,
}

impl Column {
    pub fn header(&self) -> String {
        match self.unit {
            Some(u) => format!("{}[{u}]", self.name),
            None => self.name.to_string(),
        }
    }
}

/// Column helper: `col("detuning", "rad/ps")`, or `""` for dimensionless.
pub fn col(name: &'static str, unit: &'static str) -> Column {
    Column {
        name,
        unit: (!unit.is_empty()).then_some(unit),
    }
}

/// One row per experiment point; rows that failed carry an error code in the
/// `status` column and `Missing` numeric cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub experiment: &'static str,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(experiment: &'static str, columns: Vec<Column>) -> Self {
        ResultTable {
            experiment,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the columns");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn cell(&self, row: usize, name: &str) -> Option<&Cell> {
        self.rows.get(row)?.get(self.column_index(name)?)
    }

    pub fn float(&self, row: usize, name: &str) -> Option<f64> {
        match self.cell(row, name)? {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn text(&self, row: usize, name: &str) -> Option<&str> {
        match self.cell(row, name)? {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Float(v) => format!("{v:.11e}"),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Missing => String::new(),
    }
}

fn json_cell(c: &Cell) -> Value {
    match c {
        Cell::Float(v) if v.is_finite() => json!(v),
        Cell::Float(v) => json!(v.to_string()),
        Cell::Int(v) => json!(v),
        Cell::Text(s) => json!(s),
        Cell::Missing => Value::Null,
    }
}

pub fn render(table: &ResultTable, format: OutputFormat) -> Result<Vec<u8>> {
    if table.is_empty() {
        return Err(Error::EmptyResult);
    }
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
            w.write_record(table.columns.iter().map(Column::header))
                .map_err(csv_err)?;
            for row in &table.rows {
                w.write_record(row.iter().map(csv_cell)).map_err(csv_err)?;
            }
            w.into_inner()
                .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
        }
        OutputFormat::Record => {
            let columns: Vec<Value> = table
                .columns
                .iter()
                .map(|c| json!({ "name": c.name, "unit": c.unit }))
                .collect();
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| Value::Array(r.iter().map(json_cell).collect()))
                .collect();
            let doc = json!({ "experiment": table.experiment, "columns": columns, "rows": rows });
            let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Io(e.into()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn emit(table: &ResultTable, format: OutputFormat, path: &Path) -> Result<()> {
    let bytes = render(table, format)?;
    std::fs::write(path, bytes)?;
    Ok(())
}
