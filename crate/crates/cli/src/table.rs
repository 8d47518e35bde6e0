//! Tabular datasets and their CSV/JSON encodings.
//!
//! CSV: UTF-8, one header row, floats with 17 significant digits so every
//! value parses back to the same `f64`, undefined conditionals as the literal
//! `undefined`. JSON: `{"meta": {...}, "columns": [...], "data": {col: [...]}}`
//! with undefined values as `null`.

use std::io::Write;

use serde_json::{json, Map};

use crate::error::CliError;

/// Literal written to CSV for an undefined conditional quantity.
pub const UNDEFINED: &str = "undefined";

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Text(String),
    Undefined,
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Float(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn to_csv_field(&self) -> String {
        match self {
            Value::Float(x) => format_float(*x),
            Value::Int(i) => i.to_string(),
            Value::Text(s) => s.clone(),
            Value::Undefined => UNDEFINED.to_string(),
        }
    }

    fn parse_csv_field(field: &str) -> Value {
        if field == UNDEFINED {
            return Value::Undefined;
        }
        if let Ok(i) = field.parse::<i64>() {
            return Value::Int(i);
        }
        let numeric = field
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+'));
        if numeric {
            if let Ok(x) = field.parse::<f64>() {
                return Value::Float(x);
            }
        }
        Value::Text(field.to_string())
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Float(x) => json!(x),
            Value::Int(i) => json!(i),
            Value::Text(s) => json!(s),
            Value::Undefined => serde_json::Value::Null,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<u64> for Value {
    fn from(i: u64) -> Self {
        Value::Int(i as i64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Undefined, Into::into)
    }
}

/// Float with 17 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub meta: Map<String, serde_json::Value>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            meta: Map::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.meta.insert(key.to_string(), value.into());
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// All values of a column, `None` for non-numeric cells.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let index = self.column_index(name)?;
        Some(self.rows.iter().map(|row| row[index].as_f64()).collect())
    }

    /// First non-finite float, as `(row, column)`.
    pub fn find_non_finite(&self) -> Option<(usize, &str)> {
        self.rows.iter().enumerate().find_map(|(r, row)| {
            row.iter().enumerate().find_map(|(c, v)| match v {
                Value::Float(x) if !x.is_finite() => Some((r, self.columns[c].as_str())),
                _ => None,
            })
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut writer = csv::WriterBuilder::new().from_writer(out);
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(Value::to_csv_field))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn from_csv(text: &str) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let columns: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut table = Table::new(columns);
        for record in reader.records() {
            table.push(record?.iter().map(Value::parse_csv_field).collect());
        }
        Ok(table)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut data = Map::new();
        for (index, name) in self.columns.iter().enumerate() {
            let values = self.rows.iter().map(|row| row[index].to_json()).collect();
            data.insert(name.clone(), serde_json::Value::Array(values));
        }
        json!({
            "meta": self.meta,
            "columns": self.columns,
            "data": data,
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<(), CliError> {
        serde_json::to_writer_pretty(&mut out, &self.to_json())?;
        writeln!(out)?;
        Ok(())
    }
}
