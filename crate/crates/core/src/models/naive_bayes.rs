//! Gaussian naive Bayes on every feature, booleans included as 0/1.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NaiveBayesParams {
    /// Added to every variance, as a fraction of the largest feature variance.
    pub var_smoothing: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams { var_smoothing: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub log_prior: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

impl NaiveBayesModel {
    pub fn log_posterior(&self, row: &[f64], class: usize) -> f64 {
        let mut lp = self.log_prior[class];
        for (j, &v) in row.iter().enumerate() {
            let var = self.variances[class][j];
            let diff = v - self.means[class][j];
            lp -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + diff * diff / var);
        }
        lp
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.log_posterior(row, 1) > self.log_posterior(row, 0))
    }
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

pub(super) fn fit(p: &NaiveBayesParams, x: &[Vec<f64>], y: &[u8]) -> NaiveBayesModel {
    let d = x[0].len();
    let max_var = (0..d)
        .map(|j| mean_var(x.iter().map(move |r| r[j])).1)
        .fold(0.0, f64::max);
    // All-constant inputs still need a positive variance.
    let epsilon = if max_var > 0.0 {
        p.var_smoothing * max_var
    } else {
        f64::MIN_POSITIVE.max(p.var_smoothing)
    };
    let n = x.len() as f64;
    let mut model = NaiveBayesModel {
        log_prior: [0.0; 2],
        means: [vec![0.0; d], vec![0.0; d]],
        variances: [vec![0.0; d], vec![0.0; d]],
    };
    for class in 0..2u8 {
        let c = usize::from(class);
        let rows: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, &l)| l == class).map(|(r, _)| r).collect();
        model.log_prior[c] = (rows.len() as f64 / n).ln();
        for j in 0..d {
            let (m, v) = mean_var(rows.iter().map(|r| r[j]));
            model.means[c][j] = m;
            model.variances[c][j] = v + epsilon;
        }
    }
    model
}
