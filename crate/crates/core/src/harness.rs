//! Multi-seed evaluation: seeded 60/20/20 splits, k-fold cross-validation,
//! cross-seed averaging, a budgeted model search and tabular reports.
//!
//! The metric recorded for a (seed, model) pair is the mean of k-fold
//! cross-validation over the union of that seed's train and test partitions.
//! The validation partition is held back.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{
    self, Family, ForestParams, GbdtParams, Hyperparameters, LogisticParams, Metrics, ModelSpec, TreeParams,
};
use crate::seed;

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_MAX_CANDIDATES: usize = 200;

/// Explanation of the per-seed metric, printed under every report.
pub const COMPOSITION_NOTE: &str = "Each per-seed value is the mean of k-fold cross-validation over the \
union of that seed's train and test partitions; the validation partition is held back. Means are \
arithmetic over seeds.";

/// Notes on model families, printed under every report.
pub const FAMILY_NOTE: &str = "The kernel SVM uses an RBF kernel. The limited-depth gradient-boosted \
trees are a from-scratch stand-in for an external AutoML system's best estimator, and the search row \
comes from a seeded random search over four families.";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "split ratios must be non-negative and sum to 1, got {}/{}/{}",
                self.train, self.val, self.test
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub ratios: SplitRatios,
    /// Apply the ratios within each class instead of over all rows.
    #[serde(default)]
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        SplitSpec {
            seed,
            ratios: SplitRatios::default(),
            stratified: false,
        }
    }
}

/// Partitions of the de-duplicated rows. Index vectors refer to rows of the
/// dataset passed to [`split`].
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

fn floor_share(ratio: f64, n: usize) -> usize {
    // The small offset keeps products like 0.6 * 5 from landing just below an integer.
    ((ratio * n as f64) + 1e-9).floor() as usize
}

/// De-duplicate, shuffle with `spec.seed`, then take train, test and val in that order.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<Split> {
    spec.ratios.validate()?;
    let mut idx = ds.unique_row_indices();
    let n = idx.len();
    if n < 5 {
        return Err(Error::TooFewRows { got: n, need: 5 });
    }
    seed::shuffle(&mut idx, &mut seed::rng(spec.seed));
    let groups = if spec.stratified {
        let labels = ds.labels();
        let (zeros, ones): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| labels[i] == 0);
        vec![zeros, ones]
    } else {
        vec![idx]
    };
    let (mut train_idx, mut test_idx, mut val_idx) = (Vec::new(), Vec::new(), Vec::new());
    for g in &groups {
        let n_train = floor_share(spec.ratios.train, g.len());
        let n_test = floor_share(spec.ratios.test, g.len());
        train_idx.extend_from_slice(&g[..n_train]);
        test_idx.extend_from_slice(&g[n_train..n_train + n_test]);
        val_idx.extend_from_slice(&g[n_train + n_test..]);
    }
    Ok(Split {
        train: ds.subset_rows(&train_idx),
        val: ds.subset_rows(&val_idx),
        test: ds.subset_rows(&test_idx),
        train_idx,
        val_idx,
        test_idx,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// One entry per fold; `None` when the training folds held a single class.
    pub folds: Vec<Option<Metrics>>,
    pub mean: Metrics,
    pub skipped_folds: usize,
}

/// Sizes of `k` contiguous folds over `n` rows; the first `n % k` get one extra.
pub fn fold_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

/// Seeded, unstratified k-fold cross-validation of `spec` on `ds`.
/// Fold `i` trains with seed `derive_seed(spec.seed, i)`.
pub fn kfold_cv(spec: &ModelSpec, ds: &Dataset, k: usize, seed: u64) -> Result<CvResult> {
    kfold_cv_with(spec, ds, k, seed, false)
}

/// [`kfold_cv`] with optional stratification: after the seeded shuffle, rows
/// are grouped by class and dealt to folds round-robin.
pub fn kfold_cv_with(spec: &ModelSpec, ds: &Dataset, k: usize, seed: u64, stratified: bool) -> Result<CvResult> {
    let n = ds.n_rows();
    if k < 2 || k > n {
        return Err(Error::InvalidInput(format!("cannot make {k} folds from {n} rows")));
    }
    let (names, x) = ds.feature_matrix();
    let y = ds.labels();
    let mut order: Vec<usize> = (0..n).collect();
    seed::shuffle(&mut order, &mut seed::rng(seed));
    if stratified {
        order.sort_by_key(|&r| y[r]);
        let mut dealt: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (pos, &r) in order.iter().enumerate() {
            dealt[pos % k].push(r);
        }
        order = dealt.concat();
    }

    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for (i, size) in fold_sizes(n, k).into_iter().enumerate() {
        let held = &order[start..start + size];
        let kept: Vec<usize> = order[..start].iter().chain(&order[start + size..]).copied().collect();
        start += size;
        let xtr: Vec<Vec<f64>> = kept.iter().map(|&r| x[r].clone()).collect();
        let ytr: Vec<u8> = kept.iter().map(|&r| y[r]).collect();
        let fold_spec = spec.with_seed(seed::derive_seed(spec.seed, i as u64));
        match models::fit(&fold_spec, &names, &xtr, &ytr) {
            Ok(model) => {
                let xte: Vec<Vec<f64>> = held.iter().map(|&r| x[r].clone()).collect();
                let yte: Vec<u8> = held.iter().map(|&r| y[r]).collect();
                folds.push(Some(models::compute_metrics(&yte, &model.predict(&xte)?)?));
            }
            Err(Error::SingleClass(_)) => folds.push(None),
            Err(e) => return Err(e),
        }
    }
    let done: Vec<Metrics> = folds.iter().flatten().copied().collect();
    let skipped_folds = k - done.len();
    if done.is_empty() {
        return Err(Error::SingleClass(" in every cross-validation training fold".into()));
    }
    if skipped_folds > 0 {
        log::warn!("{skipped_folds} of {k} folds skipped: single-class training data");
    }
    Ok(CvResult {
        folds,
        mean: Metrics::mean(&done),
        skipped_folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub metrics: Metrics,
    pub skipped_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEval {
    pub name: String,
    pub spec: ModelSpec,
    pub per_seed: Vec<SeedMetrics>,
    pub mean: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutomlResult {
    pub spec: ModelSpec,
    pub metrics: Metrics,
    pub candidates_evaluated: usize,
    /// True when no candidate finished inside the budget and the default
    /// gradient-boosted spec was returned instead.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub models: Vec<ModelEval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub automl: Option<AutomlResult>,
    /// Configuration echo, printed verbatim in report footers.
    pub config: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub seeds: Vec<u64>,
    pub k: usize,
    pub ratios: SplitRatios,
    #[serde(default)]
    pub stratified: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            seeds: (1..=50).collect(),
            k: DEFAULT_K,
            ratios: SplitRatios::default(),
            stratified: false,
        }
    }
}

/// One default spec per family, in report order.
pub fn default_specs(seed: u64) -> Vec<ModelSpec> {
    Family::ALL
        .iter()
        .map(|&f| ModelSpec::default_for(f).with_seed(seed))
        .collect()
}

/// Evaluate every spec on every seed. Work units run in parallel; results are
/// assembled in (spec, seed) order, so the report does not depend on scheduling.
pub fn run_seeds(specs: &[ModelSpec], ds: &Dataset, cfg: &HarnessConfig) -> Result<EvalReport> {
    cfg.ratios.validate()?;
    let splits: Vec<(u64, Dataset)> = cfg
        .seeds
        .par_iter()
        .map(|&s| {
            let sp = split(
                ds,
                &SplitSpec {
                    seed: s,
                    ratios: cfg.ratios,
                    stratified: cfg.stratified,
                },
            )?;
            let rows: Vec<usize> = sp.train_idx.iter().chain(&sp.test_idx).copied().collect();
            Ok((s, ds.subset_rows(&rows)))
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|m| (0..splits.len()).map(move |s| (m, s)))
        .collect();
    let results: Vec<SeedMetrics> = jobs
        .par_iter()
        .map(|&(m, s)| {
            let (seed_value, data) = &splits[s];
            let spec = specs[m].with_seed(seed::derive_seed(specs[m].seed, *seed_value));
            let cv = kfold_cv_with(&spec, data, cfg.k, *seed_value, cfg.stratified)?;
            Ok(SeedMetrics {
                seed: *seed_value,
                metrics: cv.mean,
                skipped_folds: cv.skipped_folds,
            })
        })
        .collect::<Result<_>>()?;

    let models = specs
        .iter()
        .enumerate()
        .map(|(m, spec)| {
            let per_seed = results[m * splits.len()..(m + 1) * splits.len()].to_vec();
            let all: Vec<Metrics> = per_seed.iter().map(|s| s.metrics).collect();
            ModelEval {
                name: spec.family().display_name().to_string(),
                spec: spec.clone(),
                mean: Metrics::mean(&all),
                per_seed,
            }
        })
        .collect();
    let mut config = Map::new();
    config.insert("seeds".into(), serde_json::to_value(&cfg.seeds)?);
    config.insert("k".into(), cfg.k.into());
    config.insert("ratios".into(), serde_json::to_value(cfg.ratios)?);
    config.insert("stratified".into(), cfg.stratified.into());
    Ok(EvalReport {
        models,
        automl: None,
        config,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutomlConfig {
    pub budget_seconds: f64,
    pub max_candidates: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for AutomlConfig {
    fn default() -> Self {
        AutomlConfig {
            budget_seconds: 60.0,
            max_candidates: DEFAULT_MAX_CANDIDATES,
            k: DEFAULT_K,
            seed: 0,
        }
    }
}

/// Families cycled by the search, in order.
pub const SEARCH_FAMILIES: [Family; 4] = [
    Family::GbdtLimitedDepth,
    Family::RandomForest,
    Family::Logistic,
    Family::DecisionTree,
];

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

/// Candidate `i` of the search. The sequence depends only on `seed`.
///
/// Ranges: gbdt rounds 50..=400, learning rate log-uniform [0.03, 0.3], depth
/// 1..=3; forest 50..=200 trees, depth unlimited or 3..=12, min split 2..=10;
/// logistic lambda log-uniform [1e-3, 1e2]; tree depth unlimited or 2..=10,
/// min split 2..=20.
pub fn search_candidate(seed: u64, i: usize) -> ModelSpec {
    let mut rng = seed::rng(seed::derive_seed(seed, i as u64));
    let family = SEARCH_FAMILIES[i % SEARCH_FAMILIES.len()];
    let depth_or_unlimited = |rng: &mut rand_chacha::ChaCha8Rng, lo: usize, hi: usize| {
        if rng.random_bool(0.25) {
            None
        } else {
            Some(rng.random_range(lo..=hi))
        }
    };
    let params = match family {
        Family::GbdtLimitedDepth => Hyperparameters::GbdtLimitedDepth(GbdtParams {
            rounds: rng.random_range(50..=400),
            learning_rate: log_uniform(&mut rng, 0.03, 0.3),
            max_depth: rng.random_range(1..=3),
            ..GbdtParams::default()
        }),
        Family::RandomForest => Hyperparameters::RandomForest(ForestParams {
            n_trees: rng.random_range(50..=200),
            max_features: None,
            tree: TreeParams {
                max_depth: depth_or_unlimited(&mut rng, 3, 12),
                min_samples_split: rng.random_range(2..=10),
            },
        }),
        Family::Logistic => Hyperparameters::Logistic(LogisticParams {
            lambda: log_uniform(&mut rng, 1e-3, 1e2),
            ..LogisticParams::default()
        }),
        _ => Hyperparameters::DecisionTree(TreeParams {
            max_depth: depth_or_unlimited(&mut rng, 2, 10),
            min_samples_split: rng.random_range(2..=20),
        }),
    };
    ModelSpec::new(params, seed::derive_seed(seed, i as u64))
}

/// Seeded random search maximizing mean k-fold F1. Candidates that finish
/// after the wall-clock budget are discarded; the first candidate wins ties.
pub fn automl_search(ds: &Dataset, cfg: &AutomlConfig) -> Result<AutomlResult> {
    if cfg.budget_seconds.is_nan() || cfg.budget_seconds <= 0.0 {
        return Err(Error::InvalidInput("search budget must be positive".into()));
    }
    let data = ds.dedup_rows();
    let budget = Duration::from_secs_f64(cfg.budget_seconds);
    let start = Instant::now();
    let mut best: Option<(ModelSpec, Metrics)> = None;
    let mut evaluated = 0;
    for i in 0..cfg.max_candidates {
        if start.elapsed() >= budget {
            break;
        }
        let spec = search_candidate(cfg.seed, i);
        let cv = kfold_cv(&spec, &data, cfg.k, cfg.seed)?;
        if start.elapsed() > budget {
            break;
        }
        evaluated += 1;
        if best.as_ref().is_none_or(|(_, m)| cv.mean.f1 > m.f1) {
            best = Some((spec, cv.mean));
        }
    }
    match best {
        Some((spec, metrics)) => Ok(AutomlResult {
            spec,
            metrics,
            candidates_evaluated: evaluated,
            fallback: false,
        }),
        None => {
            log::warn!("search budget too small: no candidate finished; using the default gradient-boosted spec");
            let spec = ModelSpec::default_for(Family::GbdtLimitedDepth).with_seed(cfg.seed);
            let cv = kfold_cv(&spec, &data, cfg.k, cfg.seed)?;
            Ok(AutomlResult {
                spec,
                metrics: cv.mean,
                candidates_evaluated: 0,
                fallback: true,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
}

pub fn percent(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn automl_label(a: &AutomlResult) -> String {
    let params = serde_json::to_value(&a.spec.params)
        .ok()
        .and_then(|v| v.get("hyperparameters").cloned())
        .unwrap_or(Value::Null);
    let suffix = if a.fallback { ", budget fallback" } else { "" };
    format!("Search best: {} {}{}", a.spec.family(), params, suffix)
}

fn rows(r: &EvalReport) -> Vec<(String, String, Metrics)> {
    let mut out: Vec<(String, String, Metrics)> = r
        .models
        .iter()
        .enumerate()
        .map(|(i, m)| ((i + 1).to_string(), m.name.clone(), m.mean))
        .collect();
    if let Some(a) = &r.automl {
        out.push(("search".into(), automl_label(a), a.metrics));
    }
    out
}

fn footer(r: &EvalReport) -> Vec<String> {
    vec![
        COMPOSITION_NOTE.to_string(),
        FAMILY_NOTE.to_string(),
        format!("Configuration: {}", Value::Object(r.config.clone())),
    ]
}

/// Table of cross-seed means, one row per model plus the search row.
pub fn report(r: &EvalReport, format: ReportFormat) -> String {
    let mut s = String::new();
    match format {
        ReportFormat::Markdown => {
            s.push_str("| # | Model | Accuracy | Precision | Recall | F1 |\n");
            s.push_str("|---|---|---|---|---|---|\n");
            for (id, name, m) in rows(r) {
                let name = name.replace('|', "\\|");
                let _ = writeln!(
                    s,
                    "| {id} | {name} | {} | {} | {} | {} |",
                    percent(m.accuracy),
                    percent(m.precision),
                    percent(m.recall),
                    percent(m.f1)
                );
            }
            s.push('\n');
            for line in footer(r) {
                let _ = writeln!(s, "{line}\n");
            }
            s.pop();
        }
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            let _ = w.write_record(["id", "model", "accuracy", "precision", "recall", "f1"]);
            for (id, name, m) in rows(r) {
                let _ = w.write_record([
                    id,
                    name,
                    percent(m.accuracy),
                    percent(m.precision),
                    percent(m.recall),
                    percent(m.f1),
                ]);
            }
            s = String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default();
            for line in footer(r) {
                let _ = writeln!(s, "# {line}");
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Cell, Column, ColumnKind};

    fn dataset(n: usize) -> Dataset {
        let cols = vec![
            Column::new("x", ColumnKind::Numeric),
            Column::new("b", ColumnKind::Boolean),
            Column::new("label", ColumnKind::Label),
        ];
        let rows = (0..n)
            .map(|i| vec![Cell::Num(i as f64), Cell::Bool(i % 3 == 0), Cell::Bool(i % 2 == 0)])
            .collect();
        Dataset::new(cols, rows).unwrap()
    }

    fn separable(n: usize) -> Dataset {
        let cols = vec![
            Column::new("x", ColumnKind::Numeric),
            Column::new("label", ColumnKind::Label),
        ];
        let rows = (0..n)
            .map(|i| vec![Cell::Num(i as f64), Cell::Bool(i >= n / 2)])
            .collect();
        Dataset::new(cols, rows).unwrap()
    }

    #[test]
    fn split_sizes() {
        for (n, want) in [(400, (240, 80, 80)), (5, (3, 1, 1))] {
            let s = split(&dataset(n), &SplitSpec::new(1)).unwrap();
            assert_eq!((s.train.n_rows(), s.test.n_rows(), s.val.n_rows()), want);
        }
        assert!(matches!(
            split(&dataset(4), &SplitSpec::new(1)),
            Err(Error::TooFewRows { .. })
        ));
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let ds = dataset(50);
        let a = split(&ds, &SplitSpec::new(7)).unwrap();
        assert_eq!(a, split(&ds, &SplitSpec::new(7)).unwrap());
        let mut all: Vec<usize> = a
            .train_idx
            .iter()
            .chain(&a.val_idx)
            .chain(&a.test_idx)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn split_removes_duplicates() {
        let base = dataset(10);
        let doubled: Vec<usize> = (0..10).chain(0..10).collect();
        let s = split(&base.subset_rows(&doubled), &SplitSpec::new(3)).unwrap();
        assert_eq!(s.train.n_rows() + s.val.n_rows() + s.test.n_rows(), 10);
    }

    #[test]
    fn folds_are_balanced() {
        assert_eq!(fold_sizes(10, 5), vec![2; 5]);
        assert_eq!(fold_sizes(11, 5), vec![3, 2, 2, 2, 2]);
    }

    #[test]
    fn memorizing_model_on_duplicated_rows() {
        let base = separable(10);
        let rows: Vec<usize> = (0..10).flat_map(|i| [i, i, i]).collect();
        let ds = base.subset_rows(&rows);
        let spec = ModelSpec::new(Hyperparameters::Knn(models::KnnParams { k: 1 }), 0);
        let cv = kfold_cv(&spec, &ds, 5, 4).unwrap();
        assert_eq!(cv.mean.accuracy, 1.0);
    }

    #[test]
    fn single_class_folds_are_skipped() {
        // Only one positive row: the fold holding it out trains on one class.
        let cols = vec![
            Column::new("x", ColumnKind::Numeric),
            Column::new("label", ColumnKind::Label),
        ];
        let rows = (0..10).map(|i| vec![Cell::Num(i as f64), Cell::Bool(i == 0)]).collect();
        let ds = Dataset::new(cols, rows).unwrap();
        let cv = kfold_cv(&ModelSpec::default_for(Family::Knn), &ds, 5, 1).unwrap();
        assert_eq!(cv.skipped_folds, 1);
        assert_eq!(cv.folds.iter().filter(|f| f.is_none()).count(), 1);
    }

    #[test]
    fn means_are_linear() {
        let specs = vec![ModelSpec::default_for(Family::NaiveBayes)];
        let cfg = HarnessConfig {
            seeds: vec![1, 2, 3],
            ..HarnessConfig::default()
        };
        let r = run_seeds(&specs, &dataset(60), &cfg).unwrap();
        let per: Vec<f64> = r.models[0].per_seed.iter().map(|s| s.metrics.accuracy).collect();
        let mean = per.iter().sum::<f64>() / 3.0;
        assert!((r.models[0].mean.accuracy - mean).abs() < 1e-12);
        assert_eq!(
            r.models[0].per_seed.iter().map(|s| s.seed).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }

    #[test]
    fn report_formats() {
        let empty = EvalReport {
            models: vec![],
            automl: None,
            config: Map::new(),
        };
        let md = report(&empty, ReportFormat::Markdown);
        assert_eq!(md.lines().filter(|l| l.starts_with('|')).count(), 2);
        let m = Metrics {
            accuracy: 0.6723,
            precision: 0.6838,
            recall: 0.7036,
            f1: 0.6797,
        };
        let one = EvalReport {
            models: vec![ModelEval {
                name: "Random Forest".into(),
                spec: ModelSpec::default_for(Family::RandomForest),
                per_seed: vec![SeedMetrics {
                    seed: 1,
                    metrics: m,
                    skipped_folds: 0,
                }],
                mean: m,
            }],
            automl: None,
            config: Map::new(),
        };
        let md = report(&one, ReportFormat::Markdown);
        assert!(md.contains("| 1 | Random Forest | 67.23% | 68.38% | 70.36% | 67.97% |"));
        let csv = report(&one, ReportFormat::Csv);
        assert!(csv.starts_with("id,model,accuracy,precision,recall,f1\n1,Random Forest,67.23%,68.38%,70.36%,67.97%\n"));
    }

    #[test]
    fn search_sequence_is_seeded() {
        let a: Vec<ModelSpec> = (0..8).map(|i| search_candidate(5, i)).collect();
        let b: Vec<ModelSpec> = (0..8).map(|i| search_candidate(5, i)).collect();
        assert_eq!(a, b);
        assert_eq!(a[0].family(), Family::GbdtLimitedDepth);
        assert_eq!(a[1].family(), Family::RandomForest);
        assert_eq!(a[4].family(), Family::GbdtLimitedDepth);
        for spec in &a {
            if let Hyperparameters::GbdtLimitedDepth(p) = spec.params {
                assert!((50..=400).contains(&p.rounds) && (1..=3).contains(&p.max_depth));
                assert!((0.03 - 1e-12..=0.3 + 1e-12).contains(&p.learning_rate));
            }
        }
    }

    #[test]
    fn search_finds_perfect_separator() {
        let cfg = AutomlConfig {
            budget_seconds: 1e6,
            max_candidates: 4,
            k: 5,
            seed: 2,
        };
        let r = automl_search(&separable(40), &cfg).unwrap();
        assert!(!r.fallback);
        assert_eq!(r.candidates_evaluated, 4);
        assert_eq!(r.metrics.f1, 1.0);
    }

    #[test]
    fn tiny_budget_falls_back() {
        let cfg = AutomlConfig {
            budget_seconds: 1e-9,
            ..AutomlConfig::default()
        };
        let r = automl_search(&separable(40), &cfg).unwrap();
        assert!(r.fallback);
        assert_eq!(r.spec.family(), Family::GbdtLimitedDepth);
        assert_eq!(r.candidates_evaluated, 0);
    }
}
