//! Binary classifiers behind one fit/predict contract, plus metrics.
//!
//! Every family is written from scratch. Label 1 is the injection class and
//! the positive class for metrics; wherever a vote can tie, class 0 wins.

mod gbdt;
mod knn;
mod logistic;
mod naive_bayes;
mod svm;
mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::projections::Standardization;

pub use gbdt::{GbdtModel, GbdtParams};
pub use knn::{KnnModel, KnnParams};
pub use logistic::{logistic_objective, LogisticModel, LogisticParams};
pub use naive_bayes::{NaiveBayesModel, NaiveBayesParams};
pub use svm::{SvmModel, SvmParams};
pub use tree::{ForestModel, ForestParams, Tree, TreeParams};

/// Version tag written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logistic,
    RandomForest,
    SvmRbf,
    Knn,
    DecisionTree,
    NaiveBayes,
    GbdtLimitedDepth,
}

impl Family {
    /// All families in report order.
    pub const ALL: [Family; 7] = [
        Family::Logistic,
        Family::RandomForest,
        Family::SvmRbf,
        Family::Knn,
        Family::DecisionTree,
        Family::NaiveBayes,
        Family::GbdtLimitedDepth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logistic => "logistic",
            Family::RandomForest => "random_forest",
            Family::SvmRbf => "svm_rbf",
            Family::Knn => "knn",
            Family::DecisionTree => "decision_tree",
            Family::NaiveBayes => "naive_bayes",
            Family::GbdtLimitedDepth => "gbdt_limited_depth",
        }
    }

    /// Human-readable row label for reports.
    pub fn display_name(self) -> &'static str {
        match self {
            Family::Logistic => "Logistic Regression",
            Family::RandomForest => "Random Forest",
            Family::SvmRbf => "Kernel SVM (RBF)",
            Family::Knn => "K-Nearest Neighbors",
            Family::DecisionTree => "Decision Tree",
            Family::NaiveBayes => "Naive Bayes (Gaussian)",
            Family::GbdtLimitedDepth => "Gradient-Boosted Trees, limited depth",
        }
    }

    pub fn parse(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.as_str() == name)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Family plus its hyperparameters. Missing hyperparameters take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "hyperparameters", rename_all = "snake_case")]
pub enum Hyperparameters {
    Logistic(#[serde(default)] LogisticParams),
    RandomForest(#[serde(default)] ForestParams),
    SvmRbf(#[serde(default)] SvmParams),
    Knn(#[serde(default)] KnnParams),
    DecisionTree(#[serde(default)] TreeParams),
    NaiveBayes(#[serde(default)] NaiveBayesParams),
    GbdtLimitedDepth(#[serde(default)] GbdtParams),
}

impl Hyperparameters {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Logistic => Hyperparameters::Logistic(LogisticParams::default()),
            Family::RandomForest => Hyperparameters::RandomForest(ForestParams::default()),
            Family::SvmRbf => Hyperparameters::SvmRbf(SvmParams::default()),
            Family::Knn => Hyperparameters::Knn(KnnParams::default()),
            Family::DecisionTree => Hyperparameters::DecisionTree(TreeParams::default()),
            Family::NaiveBayes => Hyperparameters::NaiveBayes(NaiveBayesParams::default()),
            Family::GbdtLimitedDepth => Hyperparameters::GbdtLimitedDepth(GbdtParams::default()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Hyperparameters::Logistic(_) => Family::Logistic,
            Hyperparameters::RandomForest(_) => Family::RandomForest,
            Hyperparameters::SvmRbf(_) => Family::SvmRbf,
            Hyperparameters::Knn(_) => Family::Knn,
            Hyperparameters::DecisionTree(_) => Family::DecisionTree,
            Hyperparameters::NaiveBayes(_) => Family::NaiveBayes,
            Hyperparameters::GbdtLimitedDepth(_) => Family::GbdtLimitedDepth,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidHyperparameters {
                family: self.family().to_string(),
                reason: reason.to_string(),
            })
        };
        let positive = |x: f64| x.is_finite() && x > 0.0;
        match self {
            Hyperparameters::Logistic(p) => {
                if !(p.lambda.is_finite() && p.lambda >= 0.0) || !positive(p.tolerance) || p.max_iterations == 0 {
                    return bad("lambda must be >= 0, tolerance > 0, max_iterations > 0");
                }
            }
            Hyperparameters::RandomForest(p) => {
                if p.n_trees == 0
                    || p.max_features == Some(0)
                    || p.tree.min_samples_split < 2
                    || p.tree.max_depth == Some(0)
                {
                    return bad("n_trees, max_features and max_depth must be > 0; min_samples_split >= 2");
                }
            }
            Hyperparameters::DecisionTree(p) => {
                if p.min_samples_split < 2 || p.max_depth == Some(0) {
                    return bad("min_samples_split must be >= 2 and max_depth > 0");
                }
            }
            Hyperparameters::SvmRbf(p) => {
                if !positive(p.c)
                    || !positive(p.tolerance)
                    || p.gamma.is_some_and(|g| !positive(g))
                    || p.max_passes == 0
                {
                    return bad("c, gamma and tolerance must be > 0; max_passes > 0");
                }
            }
            Hyperparameters::Knn(p) => {
                if p.k == 0 {
                    return bad("k must be > 0");
                }
            }
            Hyperparameters::NaiveBayes(p) => {
                if !(p.var_smoothing.is_finite() && p.var_smoothing >= 0.0) {
                    return bad("var_smoothing must be >= 0");
                }
            }
            Hyperparameters::GbdtLimitedDepth(p) => {
                if p.rounds == 0
                    || p.max_depth == 0
                    || !positive(p.learning_rate)
                    || !(p.lambda.is_finite() && p.lambda >= 0.0)
                {
                    return bad("rounds, max_depth and learning_rate must be > 0; lambda >= 0");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub params: Hyperparameters,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(params: Hyperparameters, seed: u64) -> Self {
        ModelSpec { params, seed }
    }

    pub fn default_for(family: Family) -> Self {
        ModelSpec::new(Hyperparameters::default_for(family), 0)
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ModelSpec {
            params: self.params.clone(),
            seed,
        }
    }
}

/// Learned state of each family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Learned {
    Logistic(LogisticModel),
    Forest(ForestModel),
    Svm(SvmModel),
    Knn(KnnModel),
    Tree(Tree),
    NaiveBayes(NaiveBayesModel),
    Gbdt(GbdtModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub spec: ModelSpec,
    /// Feature names the model was trained on, in column order.
    pub features: Vec<String>,
    /// Present for families that standardize internally.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Standardization>,
    pub learned: Learned,
}

fn check_matrix(x: &[Vec<f64>], d: usize) -> Result<()> {
    for (r, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::SchemaMismatch(format!(
                "row {r} has {} features, expected {d}",
                row.len()
            )));
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { row: r, col: c });
        }
    }
    Ok(())
}

/// Train `spec` on `x` (rows of `features.len()` values) with binary labels `y`.
pub fn fit(spec: &ModelSpec, features: &[String], x: &[Vec<f64>], y: &[u8]) -> Result<TrainedModel> {
    spec.params.validate()?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFewRows { got: x.len(), need: 2 });
    }
    check_matrix(x, features.len())?;
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let ones = y.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::SingleClass(" in training labels".into()));
    }

    let standardize = |x: &[Vec<f64>]| {
        let s = Standardization::fit(x);
        let z = s.apply(x);
        (Some(s), z)
    };
    let (standardization, learned) = match &spec.params {
        Hyperparameters::Logistic(p) => {
            let (s, z) = standardize(x);
            (s, Learned::Logistic(logistic::fit(p, &z, y)))
        }
        Hyperparameters::SvmRbf(p) => {
            let (s, z) = standardize(x);
            (s, Learned::Svm(svm::fit(p, &z, y)))
        }
        Hyperparameters::Knn(p) => {
            let (s, z) = standardize(x);
            (s, Learned::Knn(knn::fit(p, &z, y)))
        }
        Hyperparameters::DecisionTree(p) => (None, Learned::Tree(tree::fit_tree(p, x, y))),
        Hyperparameters::RandomForest(p) => (None, Learned::Forest(tree::fit_forest(p, x, y, spec.seed))),
        Hyperparameters::NaiveBayes(p) => (None, Learned::NaiveBayes(naive_bayes::fit(p, x, y))),
        Hyperparameters::GbdtLimitedDepth(p) => (None, Learned::Gbdt(gbdt::fit(p, x, y))),
    };
    Ok(TrainedModel {
        version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        features: features.to_vec(),
        standardization,
        learned,
    })
}

/// Train on every feature column of `ds`.
pub fn fit_dataset(spec: &ModelSpec, ds: &Dataset) -> Result<TrainedModel> {
    let (names, x) = ds.feature_matrix();
    fit(spec, &names, &x, &ds.labels())
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        self.spec.family()
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<u8>> {
        check_matrix(x, self.features.len())?;
        let scaled;
        let x = match &self.standardization {
            Some(s) => {
                scaled = s.apply(x);
                &scaled[..]
            }
            None => x,
        };
        Ok(x.iter().map(|row| self.predict_row(row)).collect())
    }

    fn predict_row(&self, row: &[f64]) -> u8 {
        match &self.learned {
            Learned::Logistic(m) => m.predict(row),
            Learned::Forest(m) => m.predict(row),
            Learned::Svm(m) => m.predict(row),
            Learned::Knn(m) => m.predict(row),
            Learned::Tree(m) => u8::from(m.value(row) > 0.5),
            Learned::NaiveBayes(m) => m.predict(row),
            Learned::Gbdt(m) => m.predict(row),
        }
    }

    /// Predict the rows of `ds`, whose feature columns must equal the training schema.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<u8>> {
        let (names, x) = ds.feature_matrix();
        if names != self.features {
            return Err(Error::SchemaMismatch(format!(
                "dataset features {names:?} differ from model features {:?}",
                self.features
            )));
        }
        self.predict(&x)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(text)?;
        if m.version != MODEL_FORMAT_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "unsupported model format version {}",
                m.version
            )));
        }
        Ok(m)
    }
}

/// Binary classification metrics with injection (1) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    /// Element-wise arithmetic mean; all zeros for an empty slice.
    pub fn mean(items: &[Metrics]) -> Metrics {
        if items.is_empty() {
            return Metrics::default();
        }
        let n = items.len() as f64;
        let sum = |f: fn(&Metrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        Metrics {
            accuracy: sum(|m| m.accuracy),
            precision: sum(|m| m.precision),
            recall: sum(|m| m.recall),
            f1: sum(|m| m.f1),
        }
    }
}

pub fn compute_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidInput("metrics need at least one prediction".into()));
    }
    let (mut tp, mut fp, mut fnn, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == 1, p == 1) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fnn += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fnn);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        accuracy: ratio(tp + tn, y_true.len()),
        precision,
        recall,
        f1,
    })
}

/// Majority vote over 0/1 votes; ties go to class 0.
pub(crate) fn majority(ones: usize, total: usize) -> u8 {
    u8::from(2 * ones > total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("f{i}")).collect()
    }

    fn xor() -> (Vec<Vec<f64>>, Vec<u8>) {
        (
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
        )
    }

    /// Two noisy Gaussian blobs in `d` dimensions.
    fn blobs(n: usize, d: usize, gap: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = seed::rng(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = (i % 2) as u8;
            x.push(
                (0..d)
                    .map(|_| normal.sample(&mut rng) + gap * f64::from(label))
                    .collect(),
            );
            y.push(label);
        }
        (x, y)
    }

    fn all_specs() -> Vec<ModelSpec> {
        Family::ALL
            .iter()
            .map(|&f| ModelSpec::default_for(f).with_seed(3))
            .collect()
    }

    #[test]
    fn metrics_examples() {
        let m = compute_metrics(&[1, 1, 0, 0], &[1, 0, 0, 0]).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall), (0.75, 1.0, 0.5));
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
        let m = compute_metrics(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!(
            m,
            Metrics {
                accuracy: 1.0,
                precision: 1.0,
                recall: 1.0,
                f1: 1.0
            }
        );
        let m = compute_metrics(&[1, 0, 1], &[0, 0, 0]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(matches!(
            compute_metrics(&[1], &[1, 0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn spec_json_shape() {
        let spec = ModelSpec::default_for(Family::Knn).with_seed(4);
        let v: serde_json::Value = serde_json::to_value(&spec).unwrap();
        assert_eq!(v["family"], "knn");
        assert_eq!(v["hyperparameters"]["k"], 5);
        assert_eq!(v["seed"], 4);
        let back: ModelSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, spec);
        let partial: ModelSpec =
            serde_json::from_str(r#"{"family":"gbdt_limited_depth","hyperparameters":{"rounds":10}}"#).unwrap();
        match partial.params {
            Hyperparameters::GbdtLimitedDepth(p) => assert_eq!((p.rounds, p.max_depth), (10, 2)),
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        let spec = ModelSpec::new(Hyperparameters::Knn(KnnParams { k: 0 }), 0);
        let (x, y) = xor();
        assert!(matches!(
            fit(&spec, &names(2), &x, &y),
            Err(Error::InvalidHyperparameters { .. })
        ));
    }

    #[test]
    fn fit_errors() {
        let spec = ModelSpec::default_for(Family::Logistic);
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(fit(&spec, &names(1), &x, &[1, 1]), Err(Error::SingleClass(_))));
        let x = vec![vec![1.0], vec![f64::NAN]];
        assert!(matches!(
            fit(&spec, &names(1), &x, &[0, 1]),
            Err(Error::NonFiniteInput { row: 1, col: 0 })
        ));
    }

    #[test]
    fn knn_one_reproduces_training_labels() {
        let (x, y) = blobs(60, 3, 0.5, 11);
        let spec = ModelSpec::new(Hyperparameters::Knn(KnnParams { k: 1 }), 0);
        let m = fit(&spec, &names(3), &x, &y).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
    }

    #[test]
    fn decision_tree_solves_xor() {
        let (x, y) = xor();
        let m = fit(&ModelSpec::default_for(Family::DecisionTree), &names(2), &x, &y).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
    }

    #[test]
    fn logistic_separable_line() {
        let x = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]];
        let y = vec![0, 0, 1, 1];
        let m = fit(&ModelSpec::default_for(Family::Logistic), &names(1), &x, &y).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
    }

    #[test]
    fn naive_bayes_held_out_gaussians() {
        let mut rng = seed::rng(99);
        let n01 = Normal::new(0.0, 1.0).unwrap();
        let draw = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for _ in 0..n {
                let l: u8 = rng.random_range(0..2);
                x.push(vec![n01.sample(rng) + 6.0 * f64::from(l)]);
                y.push(l);
            }
            (x, y)
        };
        let (xtr, ytr) = draw(&mut rng, 2000);
        let (xte, yte) = draw(&mut rng, 2000);
        let m = fit(&ModelSpec::default_for(Family::NaiveBayes), &names(1), &xtr, &ytr).unwrap();
        let acc = compute_metrics(&yte, &m.predict(&xte).unwrap()).unwrap().accuracy;
        assert!(acc > 0.95, "accuracy {acc}");
    }

    #[test]
    fn gbdt_noisy_xor() {
        let mut rng = seed::rng(5);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let (base, labels) = xor();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..100 {
            for (p, &l) in base.iter().zip(&labels) {
                x.push(vec![p[0] + noise.sample(&mut rng), p[1] + noise.sample(&mut rng)]);
                y.push(l);
            }
        }
        let m = fit(&ModelSpec::default_for(Family::GbdtLimitedDepth), &names(2), &x, &y).unwrap();
        let acc = compute_metrics(&y, &m.predict(&x).unwrap()).unwrap().accuracy;
        assert!(acc >= 0.95, "accuracy {acc}");
        let Learned::Gbdt(g) = &m.learned else { panic!() };
        assert!(g.loss_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn every_family_is_total_and_deterministic() {
        let (x, y) = blobs(80, 3, 1.5, 21);
        for spec in all_specs() {
            let a = fit(&spec, &names(3), &x, &y).unwrap();
            let b = fit(&spec, &names(3), &x, &y).unwrap();
            let pa = a.predict(&x).unwrap();
            assert_eq!(pa, b.predict(&x).unwrap(), "{}", spec.family());
            assert!(pa.iter().all(|&p| p <= 1));
            let acc = compute_metrics(&y, &pa).unwrap().accuracy;
            assert!(acc > 0.7, "{} training accuracy {acc}", spec.family());
        }
    }

    #[test]
    fn serialization_round_trip() {
        let (x, y) = blobs(40, 2, 2.0, 8);
        for spec in all_specs() {
            let m = fit(&spec, &names(2), &x, &y).unwrap();
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap(), "{}", spec.family());
            assert_eq!(back, m);
        }
    }

    #[test]
    fn schema_mismatch_on_predict() {
        let (x, y) = blobs(20, 2, 2.0, 1);
        let m = fit(&ModelSpec::default_for(Family::Knn), &names(2), &x, &y).unwrap();
        assert!(matches!(m.predict(&[vec![1.0]]), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn permutation_invariance_for_order_free_families() {
        let (x, y) = blobs(50, 2, 1.0, 31);
        let mut idx: Vec<usize> = (0..x.len()).collect();
        seed::shuffle(&mut idx, &mut seed::rng(2));
        let xs: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
        let ys: Vec<u8> = idx.iter().map(|&i| y[i]).collect();
        let probe = blobs(200, 2, 1.0, 32).0;
        for family in [Family::Knn, Family::NaiveBayes, Family::Logistic] {
            let spec = ModelSpec::default_for(family);
            let a = fit(&spec, &names(2), &x, &y).unwrap().predict(&probe).unwrap();
            let b = fit(&spec, &names(2), &xs, &ys).unwrap().predict(&probe).unwrap();
            assert_eq!(a, b, "{family}");
        }
    }

    #[test]
    fn label_flip_symmetry() {
        let (x, y) = blobs(61, 2, 1.0, 41);
        let flipped: Vec<u8> = y.iter().map(|v| 1 - v).collect();
        let probe = blobs(200, 2, 1.0, 42).0;
        for family in [Family::Knn, Family::NaiveBayes] {
            let spec = ModelSpec::default_for(family);
            let a = fit(&spec, &names(2), &x, &y).unwrap().predict(&probe).unwrap();
            let b = fit(&spec, &names(2), &x, &flipped).unwrap().predict(&probe).unwrap();
            assert!(a.iter().zip(&b).all(|(p, q)| p + q == 1), "{family}");
        }
    }
}
