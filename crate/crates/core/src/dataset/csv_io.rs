//! CSV persistence with a JSON schema sidecar (`<file>.schema.json`).
//!
//! Dialect: RFC-4180 quoting, UTF-8, `\n` terminators, mandatory header.
//! Numbers use the shortest representation that parses back to the same
//! `f64`; booleans and labels are written as `0`/`1`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Cell, Column, ColumnKind, Dataset};
use crate::error::{Error, Result};

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Schema {
    version: u32,
    columns: Vec<Column>,
}

pub fn schema_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".schema.json");
    PathBuf::from(s)
}

fn format_cell(cell: &Cell) -> String {
    match cell {
        Cell::Bool(b) => if *b { "1" } else { "0" }.to_string(),
        Cell::Num(x) => format!("{x}"),
        Cell::Text(s) => s.clone(),
    }
}

pub fn to_csv_string(ds: &Dataset) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(ds.columns().iter().map(|c| c.name.as_str()))?;
    for row in ds.rows() {
        w.write_record(row.iter().map(format_cell))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv flush: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, to_csv_string(ds)?).map_err(|e| Error::io(path, e))?;
    let schema = Schema {
        version: SCHEMA_VERSION,
        columns: ds.columns().to_vec(),
    };
    let sidecar = schema_path(path);
    let mut text = serde_json::to_string_pretty(&schema)?;
    text.push('\n');
    fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
}

fn parse_cell(raw: &str, col: &Column, row: usize) -> Result<Cell> {
    let bad = || {
        Error::SchemaMismatch(format!(
            "row {row}: {raw:?} is not a valid {} value for column {:?}",
            col.kind, col.name
        ))
    };
    Ok(match col.kind {
        ColumnKind::Boolean | ColumnKind::Label => match raw {
            "0" => Cell::Bool(false),
            "1" => Cell::Bool(true),
            _ => return Err(bad()),
        },
        ColumnKind::Numeric => Cell::Num(raw.parse::<f64>().map_err(|_| bad())?),
        ColumnKind::Text => Cell::Text(raw.to_string()),
    })
}

pub fn from_csv_str(text: &str, columns: Vec<Column>) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let expected: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
    if header != expected {
        return Err(Error::SchemaMismatch(format!(
            "header {header:?} does not match schema {expected:?}"
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != columns.len() {
            return Err(Error::SchemaMismatch(format!("row {i} has {} fields", rec.len())));
        }
        let row = rec
            .iter()
            .zip(&columns)
            .map(|(raw, col)| parse_cell(raw, col, i))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Dataset::new(columns, rows)
}

pub fn read_csv(path: &Path) -> Result<Dataset> {
    let sidecar = schema_path(path);
    let schema_text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let schema: Schema = serde_json::from_str(&schema_text)?;
    if schema.version != SCHEMA_VERSION {
        return Err(Error::SchemaMismatch(format!(
            "unsupported schema version {}",
            schema.version
        )));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_csv_str(&text, schema.columns)
}
