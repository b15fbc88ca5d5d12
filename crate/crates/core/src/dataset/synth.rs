//! Synthetic mongod logs and mongosh replay scripts for a labeled query corpus.
//!
//! The timing distributions are invented stand-ins for a real server's
//! measurements. Planning time is class-conditional, CPU time is not.

use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration};
use rand_distr::{Distribution, LogNormal};
use serde_json::{json, Map, Value};

use super::{canonical_filter, LabeledQuery};
use crate::error::{Error, Result};
use crate::log_ingest::{format_timestamp, DEFAULT_QUERY_MESSAGE};
use crate::seed;

/// Log-normal timing parameters (medians in the unit of the logged field).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingModel {
    pub benign_planning_median_us: f64,
    pub injection_planning_median_us: f64,
    pub planning_sigma_log: f64,
    pub cpu_median_ns: f64,
    pub cpu_sigma_log: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel {
            benign_planning_median_us: 150.0,
            injection_planning_median_us: 210.0,
            planning_sigma_log: 0.6,
            cpu_median_ns: 40_000.0,
            cpu_sigma_log: 0.5,
        }
    }
}

const BASE_TIME: &str = "2024-05-01T12:00:00.000+00:00";
const DATABASE: &str = "test";
const COLLECTION: &str = "users";

fn log_normal(median: f64, sigma: f64) -> LogNormal<f64> {
    LogNormal::new(median.ln(), sigma).expect("valid log-normal parameters")
}

/// One `"Slow query"` line per query, deterministic in `seed`.
pub fn synth_logs(queries: &[LabeledQuery], seed: u64, timing: &TimingModel) -> Vec<String> {
    let mut rng = seed::rng(seed);
    let benign = log_normal(timing.benign_planning_median_us, timing.planning_sigma_log);
    let injection = log_normal(timing.injection_planning_median_us, timing.planning_sigma_log);
    let cpu = log_normal(timing.cpu_median_ns, timing.cpu_sigma_log);
    let base = DateTime::parse_from_rfc3339(BASE_TIME).expect("valid base timestamp");

    queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let planning = if q.label { &injection } else { &benign }.sample(&mut rng);
            let cpu_nanos = cpu.sample(&mut rng);
            let (filter, _) = canonical_filter(&q.text);
            let ts = base + Duration::milliseconds(250 * i as i64);
            slow_query_line(
                &format_timestamp(&ts),
                filter,
                planning.round() as i64,
                cpu_nanos.round() as i64,
            )
        })
        .collect()
}

fn slow_query_line(ts: &str, filter: Map<String, Value>, planning_us: i64, cpu_ns: i64) -> String {
    let attr = json!({
        "type": "command",
        "ns": format!("{DATABASE}.{COLLECTION}"),
        "command": {
            "find": COLLECTION,
            "filter": Value::Object(filter),
            "$db": DATABASE,
        },
        "planSummary": "COLLSCAN",
        "keysExamined": 0,
        "docsExamined": 0,
        "cursorExhausted": true,
        "numYields": 0,
        "nreturned": 0,
        "queryFramework": "classic",
        "reslen": 104,
        "locks": {"FeatureCompatibilityVersion": {"acquireCount": {"r": 1}}},
        "storage": {},
        "protocol": "op_msg",
        "durationMillis": 0,
        "planningTimeMicros": planning_us,
        "cpuNanos": cpu_ns,
    });
    let line = json!({
        "t": {"$date": ts},
        "s": "I",
        "c": "COMMAND",
        "id": 51803,
        "ctx": "conn7",
        "msg": DEFAULT_QUERY_MESSAGE,
        "attr": attr,
    });
    line.to_string()
}

#[derive(Debug, Clone)]
pub struct ReplayOptions {
    pub database: String,
    pub collection: String,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            database: DATABASE.into(),
            collection: COLLECTION.into(),
        }
    }
}

/// A mongosh script that enables full profiling and issues one `find` per query.
/// Queries that are not filter documents are emitted as comments.
pub fn emit_replay_script(queries: &[LabeledQuery], opts: &ReplayOptions) -> String {
    let mut out = String::new();
    out.push_str("// Replay of a labeled query corpus. Run with: mongosh <connection-uri> <this-file>\n");
    out.push_str(&format!(
        "db = db.getSiblingDB({});\n",
        Value::String(opts.database.clone())
    ));
    out.push_str("db.setProfilingLevel(2);\n");
    let coll = Value::String(opts.collection.clone());
    for (i, q) in queries.iter().enumerate() {
        let (_, wrapped) = canonical_filter(&q.text);
        if wrapped {
            out.push_str(&format!(
                "// skipped query {i}: not a filter document: {}\n",
                Value::String(q.text.clone())
            ));
        } else if q.text.contains(['\n', '\r']) {
            let (filter, _) = canonical_filter(&q.text);
            out.push_str(&format!(
                "db.getCollection({coll}).find({}).toArray();\n",
                Value::Object(filter)
            ));
        } else {
            out.push_str(&format!(
                "db.getCollection({coll}).find({}).toArray();\n",
                q.text.trim()
            ));
        }
    }
    out
}

pub fn write_replay_script(queries: &[LabeledQuery], path: &Path, opts: &ReplayOptions) -> Result<String> {
    let script = emit_replay_script(queries, opts);
    fs::write(path, &script).map_err(|e| Error::io(path, e))?;
    Ok(script)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log_ingest::{ingest_lines, IngestOptions};

    fn qs() -> Vec<LabeledQuery> {
        vec![
            LabeledQuery::new(r#"{"a":{"$ne":null}}"#, true),
            LabeledQuery::new(r#"{ "name" : "bob" }"#, false),
            LabeledQuery::new("'; return true; var x='", true),
        ]
    }

    #[test]
    fn deterministic_given_seed() {
        let t = TimingModel::default();
        assert_eq!(synth_logs(&qs(), 9, &t), synth_logs(&qs(), 9, &t));
        assert_ne!(synth_logs(&qs(), 9, &t), synth_logs(&qs(), 10, &t));
    }

    #[test]
    fn lines_are_query_entries() {
        let lines = synth_logs(&qs(), 1, &TimingModel::default());
        let (recs, stats) = ingest_lines(lines.iter().map(String::as_str), &IngestOptions::default()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(stats.malformed_lines, 0);
        assert_eq!(recs[0].filter(), Some(r#"{"a":{"$ne":null}}"#));
        assert_eq!(recs[1].filter(), Some(r#"{"name":"bob"}"#));
        assert_eq!(recs[2].filter(), Some(r#"{"$where":"'; return true; var x='"}"#));
    }

    #[test]
    fn replay_script_template() {
        let one = emit_replay_script(&qs()[..1], &ReplayOptions::default());
        let lines: Vec<&str> = one.lines().collect();
        assert!(one.contains("db.setProfilingLevel(2);"));
        assert_eq!(
            lines.last().unwrap(),
            &r#"db.getCollection("users").find({"a":{"$ne":null}}).toArray();"#
        );
        let pos_prof = one.find("setProfilingLevel").unwrap();
        let pos_find = one.find(".find(").unwrap();
        assert!(pos_prof < pos_find);

        let empty = emit_replay_script(&[], &ReplayOptions::default());
        assert!(empty.contains("db.setProfilingLevel(2);"));
        assert!(!empty.contains(".find("));

        let all = emit_replay_script(&qs(), &ReplayOptions::default());
        assert!(all.contains("// skipped query 2: not a filter document"));
        assert_eq!(all.matches(".find(").count(), 2);
    }
}
