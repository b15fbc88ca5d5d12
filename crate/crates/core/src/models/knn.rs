//! k-nearest neighbors with Euclidean distance on standardized features.

use serde::{Deserialize, Serialize};

use super::majority;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl KnnModel {
    /// Equal distances are ordered by training index; a tied vote goes to class 0.
    pub fn predict(&self, row: &[f64]) -> u8 {
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let k = self.k.min(dist.len());
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        dist.select_nth_unstable_by(k - 1, by_distance);
        let ones = dist[..k].iter().filter(|(_, i)| self.labels[*i] == 1).count();
        majority(ones, k)
    }
}

pub(super) fn fit(p: &KnnParams, x: &[Vec<f64>], y: &[u8]) -> KnnModel {
    KnnModel {
        k: p.k,
        points: x.to_vec(),
        labels: y.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_ties_use_training_order() {
        // Query at 0 is equidistant from -1 (label 1) and 1 (label 0).
        let m = fit(&KnnParams { k: 1 }, &[vec![-1.0], vec![1.0]], &[1, 0]);
        assert_eq!(m.predict(&[0.0]), 1);
        let m = fit(&KnnParams { k: 1 }, &[vec![1.0], vec![-1.0]], &[0, 1]);
        assert_eq!(m.predict(&[0.0]), 0);
    }

    #[test]
    fn vote_tie_goes_to_benign() {
        let m = fit(&KnnParams { k: 2 }, &[vec![0.0], vec![1.0]], &[1, 0]);
        assert_eq!(m.predict(&[0.5]), 0);
    }
}
