//! Parsing and flattening of mongod structured (JSON-per-line) logs.
//!
//! Only entries that carry a query filter are kept. With the profiler at level 2
//! every operation is logged under the `"Slow query"` message, so that message
//! plus the presence of `attr.command.filter` identifies a query entry.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, FixedOffset};
use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const DEFAULT_QUERY_MESSAGE: &str = "Slow query";

/// Key under which the serialized filter is stored in a [`FlatRecord`].
pub const FILTER_KEY: &str = "filter";

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S%.3f%:z";

/// One mongod log line.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub timestamp: DateTime<FixedOffset>,
    pub severity: String,
    pub component: String,
    pub id: u64,
    pub context: String,
    pub message: String,
    pub attributes: Map<String, Value>,
}

impl LogEntry {
    /// Serialize back to the mongod line layout (`t`, `s`, `c`, `id`, `ctx`, `msg`, `attr`).
    pub fn to_line(&self) -> String {
        let mut t = Map::new();
        t.insert("$date".into(), Value::String(format_timestamp(&self.timestamp)));
        let mut obj = Map::new();
        obj.insert("t".into(), Value::Object(t));
        obj.insert("s".into(), Value::String(self.severity.clone()));
        obj.insert("c".into(), Value::String(self.component.clone()));
        obj.insert("id".into(), Value::from(self.id));
        obj.insert("ctx".into(), Value::String(self.context.clone()));
        obj.insert("msg".into(), Value::String(self.message.clone()));
        obj.insert("attr".into(), Value::Object(self.attributes.clone()));
        Value::Object(obj).to_string()
    }

    /// The `attr.command.filter` sub-tree, when present.
    pub fn command_filter(&self) -> Option<&Map<String, Value>> {
        self.attributes
            .get("command")
            .and_then(Value::as_object)
            .and_then(|c| c.get("filter"))
            .and_then(Value::as_object)
    }
}

pub fn format_timestamp(ts: &DateTime<FixedOffset>) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

pub fn parse_timestamp(s: &str) -> Result<DateTime<FixedOffset>> {
    DateTime::parse_from_rfc3339(s).map_err(|e| Error::MalformedLine(format!("bad timestamp {s:?}: {e}")))
}

/// Leaf value of a flattened record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Scalar {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Int(i) => Some(*i as f64),
            Scalar::Float(f) => Some(*f),
            _ => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Null => f.write_str("null"),
            Scalar::Bool(b) => write!(f, "{b}"),
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Float(x) => write!(f, "{x}"),
            Scalar::Str(s) => f.write_str(s),
        }
    }
}

fn scalar_of(value: &Value) -> Option<Scalar> {
    Some(match value {
        Value::Null => Scalar::Null,
        Value::Bool(b) => Scalar::Bool(*b),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Scalar::Int(i)
            } else if let (Some(u), true) = (n.as_u64(), n.is_u64()) {
                // Beyond i64: keep magnitude as float.
                Scalar::Float(u as f64)
            } else {
                Scalar::Float(n.as_f64().unwrap_or(f64::NAN))
            }
        }
        Value::String(s) => Scalar::Str(s.clone()),
        Value::Array(_) | Value::Object(_) => return None,
    })
}

/// Dotted-path flattening of an entry's attributes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlatRecord {
    pub values: IndexMap<String, Scalar>,
}

impl FlatRecord {
    pub fn get(&self, key: &str) -> Option<&Scalar> {
        self.values.get(key)
    }

    pub fn filter(&self) -> Option<&str> {
        match self.values.get(FILTER_KEY) {
            Some(Scalar::Str(s)) => Some(s),
            _ => None,
        }
    }

    /// Rebuild a record from an already-flat key/value map. Applying
    /// [`flatten_value`] to a map of dotted keys and scalars yields the same keys.
    pub fn from_pairs<I: IntoIterator<Item = (String, Scalar)>>(pairs: I) -> Self {
        FlatRecord {
            values: pairs.into_iter().collect(),
        }
    }
}

/// Parse one log line.
pub fn parse_line(line: &str) -> Result<LogEntry> {
    let value: Value = serde_json::from_str(line).map_err(|e| Error::MalformedLine(format!("invalid json: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::MalformedLine("top level is not an object".into()))?;

    let field = |key: &str| {
        obj.get(key)
            .ok_or_else(|| Error::MalformedLine(format!("missing key {key:?}")))
    };
    let string_field = |key: &str| -> Result<String> {
        field(key)?
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| Error::MalformedLine(format!("key {key:?} is not a string")))
    };

    let t = field("t")?;
    let ts_text = match t {
        Value::Object(m) => m.get("$date").and_then(Value::as_str),
        Value::String(s) => Some(s.as_str()),
        _ => None,
    }
    .ok_or_else(|| Error::MalformedLine("key \"t\" lacks a $date string".into()))?;
    let timestamp = parse_timestamp(ts_text)?;

    let id = field("id")?
        .as_u64()
        .ok_or_else(|| Error::MalformedLine("key \"id\" is not a non-negative integer".into()))?;

    // `attr` is absent on some message types; treat that as an empty tree.
    let attributes = match obj.get("attr") {
        None => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(Error::MalformedLine("key \"attr\" is not an object".into())),
    };

    Ok(LogEntry {
        timestamp,
        severity: string_field("s")?,
        component: string_field("c")?,
        id,
        context: string_field("ctx")?,
        message: string_field("msg")?,
        attributes,
    })
}

/// True iff the entry carries `message` and an `attr.command.filter` sub-tree.
pub fn is_query_entry_with(entry: &LogEntry, message: &str) -> bool {
    entry.message == message && entry.command_filter().is_some()
}

pub fn is_query_entry(entry: &LogEntry) -> bool {
    is_query_entry_with(entry, DEFAULT_QUERY_MESSAGE)
}

/// Flatten the attributes of `entry` under `attr.`; the command filter is kept
/// as compact JSON text under [`FILTER_KEY`].
pub fn flatten(entry: &LogEntry) -> FlatRecord {
    let mut out = IndexMap::new();
    for (key, value) in &entry.attributes {
        if key == "command" {
            if let Value::Object(cmd) = value {
                for (ck, cv) in cmd {
                    if ck == "filter" && cv.is_object() {
                        out.insert(FILTER_KEY.to_string(), Scalar::Str(cv.to_string()));
                    } else {
                        flatten_value(&format!("attr.command.{ck}"), cv, &mut out);
                    }
                }
                continue;
            }
        }
        flatten_value(&format!("attr.{key}"), value, &mut out);
    }
    FlatRecord { values: out }
}

/// Recursively write every scalar leaf of `value` under dotted `path`.
pub fn flatten_value(path: &str, value: &Value, out: &mut IndexMap<String, Scalar>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten_value(&format!("{path}.{k}"), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_value(&format!("{path}.{i}"), v, out);
            }
        }
        leaf => {
            if let Some(s) = scalar_of(leaf) {
                out.insert(path.to_string(), s);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub total_lines: usize,
    pub query_lines: usize,
    pub malformed_lines: usize,
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Abort on the first malformed line instead of skipping it.
    pub strict: bool,
    pub query_message: String,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            strict: false,
            query_message: DEFAULT_QUERY_MESSAGE.to_string(),
        }
    }
}

/// Parse and flatten every query line of an in-memory log. Blank lines are ignored.
pub fn ingest_lines<'a, I>(lines: I, opts: &IngestOptions) -> Result<(Vec<FlatRecord>, IngestStats)>
where
    I: IntoIterator<Item = &'a str>,
{
    let lines: Vec<&str> = lines.into_iter().filter(|l| !l.trim().is_empty()).collect();
    let parsed: Vec<Result<LogEntry>> = lines.par_iter().map(|l| parse_line(l)).collect();

    let mut stats = IngestStats {
        total_lines: lines.len(),
        ..IngestStats::default()
    };
    let mut records = Vec::new();
    for (lineno, p) in parsed.into_iter().enumerate() {
        match p {
            Ok(entry) => {
                if is_query_entry_with(&entry, &opts.query_message) {
                    stats.query_lines += 1;
                    records.push(flatten(&entry));
                }
            }
            Err(e) => {
                if opts.strict {
                    let detail = match e {
                        Error::MalformedLine(m) => m,
                        other => other.to_string(),
                    };
                    return Err(Error::MalformedLine(format!("line {}: {detail}", lineno + 1)));
                }
                log::debug!("skipping malformed line {}: {e}", lineno + 1);
                stats.malformed_lines += 1;
            }
        }
    }
    Ok((records, stats))
}

pub fn ingest_file(path: &Path, opts: &IngestOptions) -> Result<(Vec<FlatRecord>, IngestStats)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    for line in BufReader::new(file).lines() {
        lines.push(line.map_err(|e| Error::io(path, e))?);
    }
    ingest_lines(lines.iter().map(String::as_str), opts)
}
