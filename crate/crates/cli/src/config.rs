//! Run configuration for the `pipeline` subcommand.
//!
//! A single JSON document; relative paths resolve against the directory that
//! holds the config file. Command-line flags override file values.

use std::path::{Path, PathBuf};

use logsentinel_core::harness::SplitRatios;
use logsentinel_core::models::Family;
use logsentinel_core::projections::EmbeddingKind;
use logsentinel_core::stats::MwuMode;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Inclusive seed range written as `"start:end"` or a single number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SeedRange {
    pub start: u64,
    pub end: u64,
}

impl SeedRange {
    pub fn seeds(&self) -> Vec<u64> {
        (self.start..=self.end).collect()
    }
}

impl Default for SeedRange {
    fn default() -> Self {
        SeedRange { start: 1, end: 50 }
    }
}

impl TryFrom<String> for SeedRange {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<SeedRange> for String {
    fn from(r: SeedRange) -> String {
        format!("{}:{}", r.start, r.end)
    }
}

impl std::str::FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("invalid seed range {s:?}"));
        let (start, end) = match s.split_once(':') {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if start > end {
            return Err(format!("seed range {s:?} is empty"));
        }
        Ok(SeedRange { start, end })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneSettings {
    pub perplexity: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for TsneSettings {
    fn default() -> Self {
        TsneSettings {
            perplexity: 30.0,
            iterations: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Labeled query corpus (JSON array of `{text, label}`).
    pub queries: PathBuf,
    /// Existing mongod log. When absent, a log is synthesized from the corpus.
    pub log: Option<PathBuf>,
    pub synth_seed: u64,
    pub out_dir: PathBuf,
    pub strict_ingest: bool,
    pub alpha: f64,
    pub yates: bool,
    pub mwu_mode: MwuMode,
    pub projections: Vec<EmbeddingKind>,
    pub tsne: TsneSettings,
    pub svg: bool,
    pub families: Vec<Family>,
    pub seeds: SeedRange,
    pub ratios: SplitRatios,
    pub k: usize,
    pub stratify: bool,
    /// Seconds for the model search; 0 skips the search.
    pub budget_seconds: f64,
    pub max_candidates: usize,
    pub search_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            queries: PathBuf::from("queries.json"),
            log: None,
            synth_seed: 1,
            out_dir: PathBuf::from("out"),
            strict_ingest: false,
            alpha: 0.01,
            yates: false,
            mwu_mode: MwuMode::Auto,
            projections: vec![EmbeddingKind::Lda, EmbeddingKind::Pca, EmbeddingKind::Tsne],
            tsne: TsneSettings::default(),
            svg: true,
            families: Family::ALL.to_vec(),
            seeds: SeedRange::default(),
            ratios: SplitRatios::default(),
            k: 5,
            stratify: false,
            budget_seconds: 60.0,
            max_candidates: 200,
            search_seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.queries = base.join(&cfg.queries);
        cfg.log = cfg.log.map(|l| base.join(l));
        cfg.out_dir = base.join(&cfg.out_dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if self.ratios.validate().is_err() {
            return bad("split ratios must be non-negative and sum to 1".into());
        }
        if !(self.budget_seconds.is_finite() && self.budget_seconds >= 0.0) {
            return bad("budget_seconds must be >= 0".into());
        }
        if self.families.is_empty() {
            return bad("at least one model family is required".into());
        }
        if self.tsne.perplexity.is_nan() || self.tsne.perplexity <= 0.0 || self.tsne.iterations == 0 {
            return bad("t-SNE perplexity and iterations must be positive".into());
        }
        Ok(())
    }

    /// Echo printed into reports. Paths are shown as given, minus the
    /// config directory prefix, so reports do not depend on the checkout location.
    pub fn echo(&self, base: &Path) -> serde_json::Map<String, serde_json::Value> {
        let mut shown = self.clone();
        let rel = |p: &Path| {
            p.strip_prefix(base)
                .map(Path::to_path_buf)
                .unwrap_or_else(|_| p.to_path_buf())
        };
        shown.queries = rel(&self.queries);
        shown.log = self.log.as_deref().map(rel);
        shown.out_dir = rel(&self.out_dir);
        match serde_json::to_value(&shown) {
            Ok(serde_json::Value::Object(m)) => m,
            _ => serde_json::Map::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_range_forms() {
        assert_eq!("1:50".parse::<SeedRange>().unwrap().seeds().len(), 50);
        assert_eq!("7".parse::<SeedRange>().unwrap().seeds(), vec![7]);
        assert!("5:1".parse::<SeedRange>().is_err());
        assert!("a:b".parse::<SeedRange>().is_err());
    }

    #[test]
    fn defaults_fill_missing_fields() {
        let cfg: RunConfig = serde_json::from_str(r#"{"queries":"q.json","seeds":"1:3"}"#).unwrap();
        assert_eq!(cfg.seeds, SeedRange { start: 1, end: 3 });
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.families.len(), 7);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"alpah":0.05}"#).is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let cfg = RunConfig {
            alpha: 1.5,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
