use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Cell, Column, ColumnKind, Dataset, LabeledQuery, LABEL_COLUMN};
use crate::error::{Error, Result};
use crate::filter_features::{self, tokenize_filter, FeatureValue, TokenKind, FEATURE_COLUMNS};
use crate::log_ingest::{FlatRecord, Scalar, FILTER_KEY};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinReport {
    pub records: usize,
    pub queries: usize,
    pub matched: usize,
    pub unmatched_records: usize,
    pub unmatched_queries: usize,
    /// Log keys missing from at least one matched record; left out of the dataset.
    pub sparse_columns: Vec<String>,
}

fn requote(content: &str, quote: char) -> String {
    if quote == '"' {
        return format!("\"{content}\"");
    }
    let mut out = String::with_capacity(content.len() + 2);
    out.push('"');
    let mut chars = content.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('\'') => out.push('\''),
                Some(other) => {
                    out.push('\\');
                    out.push(other);
                }
                None => out.push_str("\\\\"),
            },
            '"' => out.push_str("\\\""),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Lexical normalization: whitespace outside string literals removed, every
/// string and key double-quoted. Unquoted keys (`{a: 1}`) are quoted too.
pub fn normalize_filter_text(text: &str) -> String {
    let tokens = tokenize_filter(text);
    let mut out = String::with_capacity(text.len());
    for (i, tok) in tokens.iter().enumerate() {
        let is_key = tokens
            .get(i + 1)
            .is_some_and(|t| t.kind == TokenKind::Punctuation && t.text == ":");
        let first = tok.text.chars().next().unwrap_or(' ');
        let quoted = first == '"' || first == '\'';
        let quotable = matches!(
            tok.kind,
            TokenKind::FieldName | TokenKind::Operator | TokenKind::BareDollar | TokenKind::StringLiteral
        );
        if quoted {
            out.push_str(&requote(tok.unquoted(), first));
        } else if quotable && is_key {
            out.push_str(&requote(&tok.text, '"'));
        } else {
            out.push_str(&tok.text);
        }
    }
    out
}

/// The filter document mongod would log for `text`: the parsed object when the
/// text is (or normalizes to) a JSON object, otherwise `{"$where": text}`.
/// The boolean is true when the wrapper was applied.
pub fn canonical_filter(text: &str) -> (Map<String, Value>, bool) {
    for candidate in [text.trim().to_string(), normalize_filter_text(text)] {
        if let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(&candidate) {
            return (obj, false);
        }
    }
    let mut obj = Map::new();
    obj.insert("$where".into(), Value::String(text.to_string()));
    (obj, true)
}

/// Compact canonical text used to match log filters against query texts.
pub fn filter_join_key(text: &str) -> String {
    Value::Object(canonical_filter(text).0).to_string()
}

fn column_name(key: &str, taken: &HashSet<String>) -> String {
    let short = key.strip_prefix("attr.").unwrap_or(key);
    if taken.contains(short) || FEATURE_COLUMNS.contains(&short) || short == LABEL_COLUMN {
        key.to_string()
    } else {
        short.to_string()
    }
}

/// Label log records with the query corpus and append filter features.
///
/// Each query is consumed by at most one record; records whose key matches a
/// query that was already consumed count as unmatched.
pub fn join_labels(records: &[FlatRecord], queries: &[LabeledQuery]) -> Result<(Dataset, JoinReport)> {
    let mut by_key: HashMap<String, VecDeque<usize>> = HashMap::new();
    for (i, q) in queries.iter().enumerate() {
        by_key.entry(filter_join_key(&q.text)).or_default().push_back(i);
    }

    let mut matched: Vec<(&FlatRecord, bool)> = Vec::new();
    for rec in records {
        let Some(filter) = rec.filter() else { continue };
        if let Some(queue) = by_key.get_mut(&filter_join_key(filter)) {
            if let Some(qi) = queue.pop_front() {
                matched.push((rec, queries[qi].label));
            }
        }
    }

    let mut report = JoinReport {
        records: records.len(),
        queries: queries.len(),
        matched: matched.len(),
        unmatched_records: records.len() - matched.len(),
        unmatched_queries: queries.len() - matched.len(),
        sparse_columns: Vec::new(),
    };
    if matched.is_empty() {
        return Err(Error::EmptyJoin {
            records: records.len(),
            queries: queries.len(),
        });
    }

    // Log-derived columns: keys of the first matched record, kept when every
    // matched record has them.
    let mut log_cols: Vec<(String, String, ColumnKind)> = Vec::new();
    let mut taken = HashSet::new();
    for key in matched[0].0.values.keys() {
        let values: Vec<Option<&Scalar>> = matched.iter().map(|(r, _)| r.get(key)).collect();
        if values.iter().any(Option::is_none) {
            report.sparse_columns.push(key.clone());
            continue;
        }
        let kind = if key == FILTER_KEY {
            ColumnKind::Text
        } else if values.iter().all(|v| matches!(v, Some(Scalar::Bool(_)))) {
            ColumnKind::Boolean
        } else if values
            .iter()
            .all(|v| v.and_then(Scalar::as_f64).is_some_and(f64::is_finite))
        {
            ColumnKind::Numeric
        } else {
            ColumnKind::Text
        };
        let name = column_name(key, &taken);
        taken.insert(name.clone());
        log_cols.push((key.clone(), name, kind));
    }
    for (rec, _) in &matched[1..] {
        for key in rec.values.keys() {
            if !matched[0].0.values.contains_key(key) && !report.sparse_columns.contains(key) {
                report.sparse_columns.push(key.clone());
            }
        }
    }

    let mut columns: Vec<Column> = log_cols
        .iter()
        .map(|(_, name, kind)| Column::new(name.clone(), *kind))
        .collect();
    let sample = filter_features::extract("{}");
    for (name, v) in sample.columns() {
        let kind = match v {
            FeatureValue::Flag(_) => ColumnKind::Boolean,
            FeatureValue::Count(_) => ColumnKind::Numeric,
            FeatureValue::Text(_) => ColumnKind::Text,
        };
        columns.push(Column::new(name, kind));
    }
    columns.push(Column::new(LABEL_COLUMN, ColumnKind::Label));

    let rows = matched
        .iter()
        .map(|(rec, label)| {
            let mut row: Vec<Cell> = log_cols
                .iter()
                .map(|(key, _, kind)| {
                    let v = rec.get(key).expect("non-sparse key");
                    match kind {
                        ColumnKind::Boolean => Cell::Bool(matches!(v, Scalar::Bool(true))),
                        ColumnKind::Numeric => Cell::Num(v.as_f64().expect("numeric")),
                        _ => Cell::Text(v.to_string()),
                    }
                })
                .collect();
            let features = filter_features::extract(rec.filter().unwrap_or_default());
            row.extend(features.columns().into_iter().map(|(_, v)| match v {
                FeatureValue::Flag(b) => Cell::Bool(b),
                FeatureValue::Count(c) => Cell::Num(c as f64),
                FeatureValue::Text(t) => Cell::Text(t),
            }));
            row.push(Cell::Bool(*label));
            row
        })
        .collect();

    Ok((Dataset::new(columns, rows)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(filter: &str, extra: &[(&str, Scalar)]) -> FlatRecord {
        let mut pairs: Vec<(String, Scalar)> = extra.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        pairs.push((FILTER_KEY.into(), Scalar::Str(filter.into())));
        FlatRecord::from_pairs(pairs)
    }

    #[test]
    fn normalization_rules() {
        assert_eq!(
            normalize_filter_text(r#"{ "a" : { "$ne" : null } }"#),
            r#"{"a":{"$ne":null}}"#
        );
        assert_eq!(
            normalize_filter_text("{'a': {'$gt': 'it\\'s'}}"),
            r#"{"a":{"$gt":"it's"}}"#
        );
        assert_eq!(normalize_filter_text("{a: {$ne: 1}}"), r#"{"a":{"$ne":1}}"#);
        assert_eq!(normalize_filter_text(r#"{"a b":"x y"}"#), r#"{"a b":"x y"}"#);
    }

    #[test]
    fn canonical_wraps_non_documents() {
        let (obj, wrapped) = canonical_filter("'; return true; var x='");
        assert!(wrapped);
        assert_eq!(obj["$where"], "'; return true; var x='");
        let (_, wrapped) = canonical_filter("{'a': 1}");
        assert!(!wrapped);
        assert_eq!(filter_join_key("{'a': 1.0}"), filter_join_key(r#"{"a":1.00}"#));
    }

    #[test]
    fn exact_match_join() {
        let recs = vec![record(
            r#"{"a":{"$ne":null}}"#,
            &[("attr.planningTimeMicros", Scalar::Int(100))],
        )];
        let qs = vec![LabeledQuery::new(r#"{"a":{"$ne":null}}"#, true)];
        let (ds, rep) = join_labels(&recs, &qs).unwrap();
        assert_eq!(ds.n_rows(), 1);
        assert_eq!(ds.labels(), vec![1]);
        assert_eq!(rep.matched, 1);
        assert!(ds.column_index("planningTimeMicros").is_some());
        assert!(ds.column_index("$ne").is_some());
        assert_eq!(ds.numeric_column("query_length_keywords_only").unwrap(), vec![13.0]);
    }

    #[test]
    fn whitespace_insensitive_join() {
        let recs = vec![record(r#"{"a":{"$ne":null}}"#, &[])];
        let qs = vec![LabeledQuery::new(r#"{ "a" : { "$ne" : null } }"#, true)];
        let (ds, _) = join_labels(&recs, &qs).unwrap();
        assert_eq!(ds.n_rows(), 1);
    }

    #[test]
    fn counts_unmatched_and_empty_join() {
        let recs = vec![record(r#"{"a":1}"#, &[]), record(r#"{"b":1}"#, &[])];
        let qs = vec![
            LabeledQuery::new(r#"{"a":1}"#, false),
            LabeledQuery::new(r#"{"c":1}"#, true),
        ];
        let (ds, rep) = join_labels(&recs, &qs).unwrap();
        assert_eq!(ds.n_rows(), 1);
        assert_eq!(rep.matched + rep.unmatched_records, rep.records);
        assert_eq!(rep.unmatched_queries, 1);

        let qs = vec![LabeledQuery::new(r#"{"zzz":1}"#, false)];
        assert!(matches!(join_labels(&recs, &qs), Err(Error::EmptyJoin { .. })));
    }

    #[test]
    fn sparse_keys_are_reported() {
        let recs = vec![
            record(r#"{"a":1}"#, &[("attr.x", Scalar::Int(1)), ("attr.y", Scalar::Int(1))]),
            record(r#"{"b":1}"#, &[("attr.x", Scalar::Int(2))]),
        ];
        let qs = vec![
            LabeledQuery::new(r#"{"a":1}"#, false),
            LabeledQuery::new(r#"{"b":1}"#, true),
        ];
        let (ds, rep) = join_labels(&recs, &qs).unwrap();
        assert_eq!(rep.sparse_columns, vec!["attr.y".to_string()]);
        assert!(ds.column_index("x").is_some());
        assert!(ds.column_index("y").is_none());
    }
}
