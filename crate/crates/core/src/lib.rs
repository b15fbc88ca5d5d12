//! Classification of MongoDB query-log entries as injection or benign.
//!
//! The crate covers the whole offline pipeline:
//!
//! - [`log_ingest`] parses mongod structured JSON logs and flattens query entries.
//! - [`filter_features`] lexes filter strings and derives operator/selector flags and lengths.
//! - [`dataset`] joins log records with a labeled query corpus, prunes constant columns,
//!   persists CSV, and generates synthetic logs and mongosh replay scripts.
//! - [`stats`] runs Mann-Whitney U and chi-square tests and selects significant features.
//! - [`projections`] computes LDA, PCA and exact t-SNE embeddings and renders SVG scatters.
//! - [`models`] holds the from-scratch classifiers and binary metrics.
//! - [`harness`] runs seeded splits, k-fold cross-validation, the budgeted model search,
//!   and renders evaluation reports.

pub mod dataset;
pub mod error;
pub mod filter_features;
pub mod harness;
pub mod log_ingest;
pub mod models;
pub mod projections;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
