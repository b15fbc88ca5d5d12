//! Typed tabular data built from log records and the labeled query corpus.

mod csv_io;
mod join;
mod synth;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{read_csv, schema_path, write_csv};
pub use join::{canonical_filter, filter_join_key, join_labels, normalize_filter_text, JoinReport};
pub use synth::{emit_replay_script, synth_logs, write_replay_script, ReplayOptions, TimingModel};

pub const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Boolean,
    Numeric,
    Text,
    Label,
}

impl ColumnKind {
    pub fn is_feature(self) -> bool {
        matches!(self, ColumnKind::Boolean | ColumnKind::Numeric)
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Boolean => "boolean",
            ColumnKind::Numeric => "numeric",
            ColumnKind::Text => "text",
            ColumnKind::Label => "label",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Column {
            name: name.into(),
            kind,
        }
    }
}

/// One cell. Boolean and label columns hold `Bool`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Bool(bool),
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Bool(b) => Some(f64::from(u8::from(*b))),
            Cell::Num(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }

    fn key(&self) -> CellKey<'_> {
        match self {
            Cell::Bool(b) => CellKey::Bool(*b),
            // -0.0 and 0.0 are the same value for de-duplication purposes.
            Cell::Num(x) => CellKey::Num(if *x == 0.0 { 0 } else { x.to_bits() }),
            Cell::Text(s) => CellKey::Text(s),
        }
    }
}

#[derive(PartialEq, Eq, Hash)]
enum CellKey<'a> {
    Bool(bool),
    Num(u64),
    Text(&'a str),
}

/// Rows of typed cells with exactly one label column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    rows: Vec<Vec<Cell>>,
}

impl Dataset {
    /// Build a dataset, checking every invariant.
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        let labels = columns.iter().filter(|c| c.kind == ColumnKind::Label).count();
        if labels != 1 {
            return Err(Error::SchemaMismatch(format!(
                "expected exactly one label column, found {labels}"
            )));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::SchemaMismatch(format!("duplicate column {:?}", c.name)));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::SchemaMismatch(format!(
                    "row {r} has {} cells, schema has {} columns",
                    row.len(),
                    columns.len()
                )));
            }
            for (c, (cell, col)) in row.iter().zip(&columns).enumerate() {
                let ok = match (col.kind, cell) {
                    (ColumnKind::Boolean | ColumnKind::Label, Cell::Bool(_)) => true,
                    (ColumnKind::Numeric, Cell::Num(x)) => {
                        if !x.is_finite() {
                            return Err(Error::NonFiniteInput { row: r, col: c });
                        }
                        true
                    }
                    (ColumnKind::Text, Cell::Text(_)) => true,
                    _ => false,
                };
                if !ok {
                    return Err(Error::SchemaMismatch(format!(
                        "row {r}: cell {cell:?} does not fit {} column {:?}",
                        col.kind, col.name
                    )));
                }
            }
        }
        Ok(Dataset { columns, rows })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn label_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Label)
            .expect("dataset invariant: one label column")
    }

    pub fn label_name(&self) -> &str {
        &self.columns[self.label_index()].name
    }

    /// Labels as 0/1 (1 = injection).
    pub fn labels(&self) -> Vec<u8> {
        let li = self.label_index();
        self.rows
            .iter()
            .map(|r| match r[li] {
                Cell::Bool(b) => u8::from(b),
                _ => unreachable!("label cells are booleans"),
            })
            .collect()
    }

    pub fn label_counts(&self) -> (usize, usize) {
        let ones = self.labels().iter().filter(|&&l| l == 1).count();
        (self.n_rows() - ones, ones)
    }

    /// Names of the numeric and boolean columns, in schema order.
    pub fn feature_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.kind.is_feature())
            .map(|c| c.name.clone())
            .collect()
    }

    /// Numeric view of a numeric or boolean column.
    pub fn numeric_column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        if !self.columns[idx].kind.is_feature() {
            return None;
        }
        Some(self.rows.iter().map(|r| r[idx].as_f64().unwrap()).collect())
    }

    /// Row-major matrix of all feature columns plus their names.
    pub fn feature_matrix(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let idx: Vec<usize> = (0..self.columns.len())
            .filter(|&i| self.columns[i].kind.is_feature())
            .collect();
        let names = idx.iter().map(|&i| self.columns[i].name.clone()).collect();
        let x = self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&i| r[i].as_f64().unwrap()).collect())
            .collect();
        (names, x)
    }

    /// Keep only the named columns (label is always kept), in schema order.
    pub fn select_columns(&self, names: &[&str]) -> Dataset {
        let keep: Vec<usize> = (0..self.columns.len())
            .filter(|&i| self.columns[i].kind == ColumnKind::Label || names.contains(&self.columns[i].name.as_str()))
            .collect();
        self.project(&keep)
    }

    fn project(&self, keep: &[usize]) -> Dataset {
        Dataset {
            columns: keep.iter().map(|&i| self.columns[i].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| keep.iter().map(|&i| r[i].clone()).collect())
                .collect(),
        }
    }

    pub fn subset_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Replace the label column with `labels`.
    pub fn with_labels(&self, labels: &[u8]) -> Result<Dataset> {
        if labels.len() != self.n_rows() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: self.n_rows(),
            });
        }
        let li = self.label_index();
        let mut out = self.clone();
        for (row, &l) in out.rows.iter_mut().zip(labels) {
            row[li] = Cell::Bool(l == 1);
        }
        Ok(out)
    }

    /// Indices of the first occurrence of each distinct row.
    pub fn unique_row_indices(&self) -> Vec<usize> {
        let mut seen = HashSet::new();
        (0..self.rows.len())
            .filter(|&i| {
                let key: Vec<CellKey<'_>> = self.rows[i].iter().map(Cell::key).collect();
                seen.insert(key)
            })
            .collect()
    }

    pub fn dedup_rows(&self) -> Dataset {
        self.subset_rows(&self.unique_row_indices())
    }
}

/// Join labels onto log records, append filter features and drop constant columns.
pub fn build_dataset(
    records: &[crate::log_ingest::FlatRecord],
    queries: &[LabeledQuery],
) -> Result<(Dataset, JoinReport, Vec<String>)> {
    let (joined, report) = join_labels(records, queries)?;
    let (ds, dropped) = drop_constant_columns(&joined);
    Ok((ds, report, dropped))
}

/// Remove every non-label column whose value is identical across all rows.
pub fn drop_constant_columns(ds: &Dataset) -> (Dataset, Vec<String>) {
    if ds.rows.is_empty() {
        return (ds.clone(), Vec::new());
    }
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for (i, col) in ds.columns.iter().enumerate() {
        let first = &ds.rows[0][i];
        let constant = ds.rows.iter().all(|r| r[i].key() == first.key());
        if constant && col.kind != ColumnKind::Label {
            dropped.push(col.name.clone());
        } else {
            keep.push(i);
        }
    }
    (ds.project(&keep), dropped)
}

/// One entry of the labeled query corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledQuery {
    pub text: String,
    /// `true` for injection.
    #[serde(deserialize_with = "deserialize_label", serialize_with = "serialize_label")]
    pub label: bool,
}

impl LabeledQuery {
    pub fn new(text: impl Into<String>, label: bool) -> Self {
        LabeledQuery {
            text: text.into(),
            label,
        }
    }
}

fn serialize_label<S: serde::Serializer>(label: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*label))
}

fn deserialize_label<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    use serde::de::Error as _;
    let v = serde_json::Value::deserialize(d)?;
    match &v {
        serde_json::Value::Bool(b) => Ok(*b),
        serde_json::Value::Number(n) => match n.as_u64() {
            Some(0) => Ok(false),
            Some(1) => Ok(true),
            _ => Err(D::Error::custom(format!("label must be 0 or 1, got {n}"))),
        },
        serde_json::Value::String(s) => match s.to_ascii_lowercase().as_str() {
            "1" | "true" | "malicious" | "injection" => Ok(true),
            "0" | "false" | "benign" => Ok(false),
            other => Err(D::Error::custom(format!("unrecognized label {other:?}"))),
        },
        _ => Err(D::Error::custom(format!("unrecognized label {v}"))),
    }
}

pub fn parse_queries(json: &str) -> Result<Vec<LabeledQuery>> {
    let queries: Vec<LabeledQuery> = serde_json::from_str(json)?;
    if let Some(i) = queries.iter().position(|q| q.text.is_empty()) {
        return Err(Error::InvalidInput(format!("query {i} has empty text")));
    }
    Ok(queries)
}

pub fn load_queries(path: &Path) -> Result<Vec<LabeledQuery>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_queries(&text)
}
