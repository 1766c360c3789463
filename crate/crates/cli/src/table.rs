//! Column-typed output tables and their CSV/JSON encodings.

use std::io::Write;

use bosegas_core::Complex64;
use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(format_number(*v)),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }
}

/// Shortest representation that reads back to the same f64.
fn format_number(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    /// `module/quantity` the number comes from.
    pub source: String,
}

/// A rectangular table; rows follow the order of the input sweep.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

/// Builds one row while declaring its columns on first use.
pub struct RowBuilder<'a> {
    table: &'a mut Table,
    first: bool,
    cells: Vec<Cell>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn row(&mut self) -> RowBuilder<'_> {
        let first = self.rows.is_empty();
        RowBuilder {
            table: self,
            first,
            cells: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .map_err(CliError::from_csv)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))
                .map_err(CliError::from_csv)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn to_json(&self, command: &str) -> Value {
        let columns: Vec<Value> = self
            .columns
            .iter()
            .map(|c| json!({ "name": c.name, "source": c.source }))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    m.insert(c.name.clone(), v.json());
                }
                Value::Object(m)
            })
            .collect();
        json!({ "command": command, "columns": columns, "rows": rows })
    }

    pub fn write<W: Write>(
        &self,
        command: &str,
        format: Format,
        mut out: W,
    ) -> Result<(), CliError> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                let text = serde_json::to_string_pretty(&self.to_json(command))
                    .map_err(|e| CliError::Io(e.to_string()))?;
                writeln!(out, "{text}").map_err(|e| CliError::Io(e.to_string()))
            }
        }
    }
}

impl RowBuilder<'_> {
    pub fn cell(mut self, name: &str, source: &str, value: impl Into<Cell>) -> Self {
        if self.first {
            self.table.columns.push(Column {
                name: name.to_string(),
                source: source.to_string(),
            });
        } else {
            debug_assert_eq!(self.table.columns[self.cells.len()].name, name);
        }
        self.cells.push(value.into());
        self
    }

    /// Adds `<name>_re` and `<name>_im`.
    pub fn complex(self, name: &str, source: &str, z: Option<Complex64>) -> Self {
        self.cell(&format!("{name}_re"), source, z.map(|z| z.re))
            .cell(&format!("{name}_im"), source, z.map(|z| z.im))
    }

    pub fn finish(self) {
        assert_eq!(
            self.cells.len(),
            self.table.columns.len(),
            "row width differs from the header"
        );
        self.table.rows.push(self.cells);
    }
}
