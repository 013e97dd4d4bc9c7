//! Small tables rendered as CSV or as a JSON array of records.

use serde_json::{Map, Value};
use sincinr::signals::format_float;

use crate::run::{usage, CliResult};

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(usage(format!(
                "unknown format {other:?}, expected csv or json"
            ))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.header.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row
                        .iter()
                        .map(|c| match c {
                            Cell::Num(v) => format_float(*v),
                            Cell::Text(s) => s.clone(),
                        })
                        .collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let records: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut m = Map::new();
                        for (k, c) in self.header.iter().zip(row) {
                            let v = match c {
                                Cell::Num(v) => serde_json::Number::from_f64(*v)
                                    .map(Value::Number)
                                    .unwrap_or(Value::Null),
                                Cell::Text(s) => Value::String(s.clone()),
                            };
                            m.insert(k.clone(), v);
                        }
                        Value::Object(m)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&records).expect("table serializes");
                s.push('\n');
                s
            }
        }
    }
}
