use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::manifest::RunManifest;
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    /// A value that was not computed for this row, written as an empty field.
    Missing,
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Missing, Into::into)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(x) => x.to_string(),
            // Shortest representation that parses back to the same f64.
            Cell::Float(x) => format!("{x:?}"),
            Cell::Bool(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(x) => Value::from(*x),
            Cell::Float(x) => Value::from(*x),
            Cell::Bool(x) => Value::from(*x),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Missing => Value::Null,
        }
    }
}

/// Column-ordered output of one command.
#[derive(Clone, Debug)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Refuses tables holding NaN or infinite values.
    pub fn check_finite(&self) -> Result<(), CliError> {
        for row in &self.rows {
            for (c, cell) in self.columns.iter().zip(row) {
                if let Cell::Float(x) = cell {
                    if !x.is_finite() {
                        return Err(CliError::Output(format!("column {c} holds a non-finite value {x}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self, manifest: &RunManifest) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (c, cell) in self.columns.iter().zip(row) {
                    m.insert(c.to_string(), cell.json());
                }
                Value::Object(m)
            })
            .collect();
        #[derive(Serialize)]
        struct Doc<'a> {
            manifest: &'a RunManifest,
            columns: &'a [&'static str],
            rows: Vec<Value>,
        }
        serde_json::to_value(Doc { manifest, columns: &self.columns, rows }).expect("table serializes")
    }
}
