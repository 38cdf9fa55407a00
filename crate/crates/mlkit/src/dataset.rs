//! Typed in-memory datasets loaded from CSV.
//!
//! CSV contract: UTF-8, mandatory header row, `,` separator, empty cell =
//! missing value. Column types come from an optional sidecar schema file
//! (`<path>.schema`, one `name:type` per line) or are inferred: a column
//! whose non-missing cells all parse as numbers is Numeric, all RFC3339
//! timestamps is Timestamp, anything else is Categorical.

use std::fmt;
use std::path::Path;

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use crate::error::MlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Numeric,
    Categorical,
    Timestamp,
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ColumnType::Numeric => "numeric",
            ColumnType::Categorical => "categorical",
            ColumnType::Timestamp => "timestamp",
        };
        f.write_str(s)
    }
}

/// One dataset cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(String),
    /// Seconds since the Unix epoch.
    Time(i64),
    Missing,
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    /// Numeric view used by preprocessing; timestamps expose epoch seconds.
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Time(t) => Some(*t as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub ty: ColumnType,
}

/// Rectangular typed table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Self {
        Dataset { columns, rows: Vec::new() }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn push_row(&mut self, row: Vec<Value>) -> Result<(), MlError> {
        if row.len() != self.columns.len() {
            return Err(MlError::RaggedRow {
                row: self.rows.len() + 1,
                got: row.len(),
                expected: self.columns.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}

fn parse_timestamp(cell: &str) -> Option<i64> {
    DateTime::parse_from_rfc3339(cell).ok().map(|t| t.timestamp())
}

fn parse_cell(cell: &str, ty: ColumnType, row: usize, column: &str) -> Result<Value, MlError> {
    if cell.is_empty() {
        return Ok(Value::Missing);
    }
    match ty {
        ColumnType::Numeric => cell
            .parse::<f64>()
            .map(Value::Num)
            .map_err(|_| bad_cell(row, column, "numeric", cell)),
        ColumnType::Timestamp => parse_timestamp(cell)
            .map(Value::Time)
            .ok_or_else(|| bad_cell(row, column, "timestamp", cell)),
        ColumnType::Categorical => Ok(Value::Cat(cell.to_string())),
    }
}

fn bad_cell(row: usize, column: &str, expected: &str, value: &str) -> MlError {
    MlError::BadCell {
        row,
        column: column.to_string(),
        expected: expected.to_string(),
        value: value.to_string(),
    }
}

fn infer_column_type(cells: &[&str]) -> ColumnType {
    let present: Vec<&&str> = cells.iter().filter(|c| !c.is_empty()).collect();
    if present.iter().all(|c| c.parse::<f64>().is_ok()) {
        ColumnType::Numeric
    } else if present.iter().all(|c| parse_timestamp(c).is_some()) {
        ColumnType::Timestamp
    } else {
        ColumnType::Categorical
    }
}

/// Parse a sidecar schema file body (`name:type` per line, `#` comments).
pub fn parse_schema_text(text: &str) -> Result<Vec<(String, ColumnType)>, MlError> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, ty) = line.split_once(':').ok_or_else(|| MlError::Csv {
            path: "<schema>".into(),
            message: format!("schema line without ':': '{line}'"),
        })?;
        let ty = match ty.trim() {
            "numeric" => ColumnType::Numeric,
            "categorical" => ColumnType::Categorical,
            "timestamp" => ColumnType::Timestamp,
            other => {
                return Err(MlError::Csv {
                    path: "<schema>".into(),
                    message: format!("unknown column type '{other}'"),
                })
            }
        };
        out.push((name.trim().to_string(), ty));
    }
    Ok(out)
}

/// Load a CSV file into a typed [`Dataset`].
///
/// When `schema` is `None`, a `<path>.schema` sidecar is consulted if it
/// exists, otherwise types are inferred from the data.
pub fn load_dataset(
    path: &Path,
    schema: Option<&[(String, ColumnType)]>,
) -> Result<Dataset, MlError> {
    let text = std::fs::read_to_string(path).map_err(|source| MlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let sidecar;
    let schema = match schema {
        Some(s) => Some(s),
        None => {
            let sidecar_path = path.with_extension(format!(
                "{}.schema",
                path.extension().and_then(|e| e.to_str()).unwrap_or("csv")
            ));
            if sidecar_path.exists() {
                let body = std::fs::read_to_string(&sidecar_path).map_err(|source| MlError::Io {
                    path: sidecar_path.display().to_string(),
                    source,
                })?;
                sidecar = parse_schema_text(&body)?;
                Some(sidecar.as_slice())
            } else {
                None
            }
        }
    };
    load_dataset_str(&text, schema, &path.display().to_string())
}

/// Same as [`load_dataset`] but over an in-memory CSV body.
pub fn load_dataset_str(
    text: &str,
    schema: Option<&[(String, ColumnType)]>,
    origin: &str,
) -> Result<Dataset, MlError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| MlError::Csv {
            path: origin.to_string(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.to_string())
        .collect();

    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| MlError::Csv {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(MlError::RaggedRow {
                row: i + 1,
                got: record.len(),
                expected: headers.len(),
            });
        }
        raw_rows.push(record.iter().map(|c| c.to_string()).collect());
    }

    let types: Vec<ColumnType> = match schema {
        Some(schema) => headers
            .iter()
            .map(|h| {
                schema
                    .iter()
                    .find(|(name, _)| name == h)
                    .map(|(_, ty)| *ty)
                    .ok_or_else(|| MlError::UnknownColumn(h.clone()))
            })
            .collect::<Result<_, _>>()?,
        None => (0..headers.len())
            .map(|c| {
                let cells: Vec<&str> = raw_rows.iter().map(|r| r[c].as_str()).collect();
                infer_column_type(&cells)
            })
            .collect(),
    };

    let columns: Vec<Column> = headers
        .iter()
        .zip(&types)
        .map(|(name, ty)| Column {
            name: name.clone(),
            ty: *ty,
        })
        .collect();

    let mut rows = Vec::with_capacity(raw_rows.len());
    for (i, raw) in raw_rows.iter().enumerate() {
        let mut row = Vec::with_capacity(columns.len());
        for (c, cell) in raw.iter().enumerate() {
            row.push(parse_cell(cell, types[c], i + 1, &headers[c])?);
        }
        rows.push(row);
    }

    Ok(Dataset { columns, rows })
}
