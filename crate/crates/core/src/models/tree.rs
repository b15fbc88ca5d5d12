//! CART classification trees (Gini impurity) and bagged random forests.
//!
//! Thresholds are midpoints between consecutive distinct values and a row goes
//! left when its value is `<=` the threshold. Among equally good splits the
//! lower feature index wins, then the lower threshold. Zero-gain splits are
//! allowed, so an impure node is split whenever some feature varies in it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::majority;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary tree stored as a node array rooted at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Leaf value reached by `row`: the injection fraction for classification
    /// trees, the additive score for boosting trees.
    pub fn value(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features examined per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    #[serde(flatten)]
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: None,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict(&self, row: &[f64]) -> u8 {
        let ones = self.trees.iter().filter(|t| t.value(row) > 0.5).count();
        majority(ones, self.trees.len())
    }
}

/// A candidate split: weighted child impurity, then feature, then threshold.
#[derive(Clone, Copy)]
pub(super) struct SplitChoice {
    pub score: f64,
    pub feature: usize,
    pub threshold: f64,
}

impl SplitChoice {
    /// Lower score wins; exact ties go to the lower feature, then threshold.
    pub fn better_than(&self, other: &SplitChoice) -> bool {
        (self.score, self.feature)
            .partial_cmp(&(other.score, other.feature))
            .is_some_and(|o| o.is_lt() || (o.is_eq() && self.threshold < other.threshold))
    }
}

/// Indices of `idx` sorted by feature `f` (stable).
pub(super) fn sorted_by(x: &[Vec<f64>], idx: &[usize], f: usize) -> Vec<usize> {
    let mut s = idx.to_vec();
    s.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
    s
}

pub(super) fn is_constant(x: &[Vec<f64>], idx: &[usize], f: usize) -> bool {
    let v = x[idx[0]][f];
    idx.iter().all(|&i| x[i][f] == v)
}

fn gini_sum(ones: f64, n: f64) -> f64 {
    // n * gini = n - (ones^2 + zeros^2) / n
    let zeros = n - ones;
    n - (ones * ones + zeros * zeros) / n
}

/// Best Gini split of `idx` on feature `f`; `None` if the feature is constant.
fn best_gini_split(x: &[Vec<f64>], y: &[u8], idx: &[usize], f: usize) -> Option<SplitChoice> {
    let sorted = sorted_by(x, idx, f);
    let n = sorted.len() as f64;
    let total_ones = sorted.iter().filter(|&&i| y[i] == 1).count() as f64;
    let mut left_ones = 0.0;
    let mut best: Option<SplitChoice> = None;
    for k in 1..sorted.len() {
        left_ones += f64::from(y[sorted[k - 1]]);
        let (lo, hi) = (x[sorted[k - 1]][f], x[sorted[k]][f]);
        if lo == hi {
            continue;
        }
        let nl = k as f64;
        let score = (gini_sum(left_ones, nl) + gini_sum(total_ones - left_ones, n - nl)) / n;
        let cand = SplitChoice {
            score,
            feature: f,
            threshold: lo + (hi - lo) / 2.0,
        };
        if best.as_ref().is_none_or(|b| cand.better_than(b)) {
            best = Some(cand);
        }
    }
    best
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    params: TreeParams,
    /// Per-split feature subsampling for forests.
    sampling: Option<(usize, ChaCha8Rng)>,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn choose(&mut self, idx: &[usize]) -> Option<SplitChoice> {
        let d = self.x[0].len();
        let mut order: Vec<usize> = (0..d).collect();
        let budget = match &mut self.sampling {
            Some((m, rng)) => {
                seed::shuffle(&mut order, rng);
                *m
            }
            None => d,
        };
        // Visit features until `budget` non-constant ones have been examined.
        let mut best: Option<SplitChoice> = None;
        let mut visited = 0;
        for f in order {
            if visited == budget {
                break;
            }
            if let Some(c) = best_gini_split(self.x, self.y, idx, f) {
                visited += 1;
                if best.as_ref().is_none_or(|b| c.better_than(b)) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn build(&mut self, idx: &[usize], depth: usize) -> usize {
        let ones = idx.iter().filter(|&&i| self.y[i] == 1).count();
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: ones as f64 / idx.len() as f64,
        });
        let pure = ones == 0 || ones == idx.len();
        let depth_capped = self.params.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || idx.len() < self.params.min_samples_split {
            return me;
        }
        let Some(split) = self.choose(idx) else { return me };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let left = self.build(&l, depth + 1);
        let right = self.build(&r, depth + 1);
        self.nodes[me] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        me
    }
}

fn grow(x: &[Vec<f64>], y: &[u8], idx: &[usize], params: TreeParams, sampling: Option<(usize, ChaCha8Rng)>) -> Tree {
    let mut b = Builder {
        x,
        y,
        params,
        sampling,
        nodes: Vec::new(),
    };
    b.build(idx, 0);
    Tree { nodes: b.nodes }
}

pub(super) fn fit_tree(p: &TreeParams, x: &[Vec<f64>], y: &[u8]) -> Tree {
    let idx: Vec<usize> = (0..x.len()).collect();
    grow(x, y, &idx, *p, None)
}

/// Trees are trained in parallel; tree `t` uses `derive_seed(seed, t)` for
/// both its bootstrap sample and its feature draws.
pub(super) fn fit_forest(p: &ForestParams, x: &[Vec<f64>], y: &[u8], seed: u64) -> ForestModel {
    let n = x.len();
    let d = x[0].len();
    let m = p
        .max_features
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d);
    let trees = (0..p.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive_seed(seed, t as u64));
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow(x, y, &idx, p.tree, Some((m, rng)))
        })
        .collect();
    ForestModel { trees }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_needs_depth_two() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = vec![0, 1, 1, 0];
        let t = fit_tree(&TreeParams::default(), &x, &y);
        assert_eq!(t.depth(), 2);
        // Root split is a zero-gain tie, resolved toward feature 0.
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, threshold, .. } if threshold == 0.5));
        for (row, &l) in x.iter().zip(&y) {
            assert_eq!(u8::from(t.value(row) > 0.5), l);
        }
    }

    #[test]
    fn depth_limit_and_min_split() {
        let x: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..16).map(|i| (i % 2) as u8).collect();
        let t = fit_tree(
            &TreeParams {
                max_depth: Some(2),
                min_samples_split: 2,
            },
            &x,
            &y,
        );
        assert!(t.depth() <= 2);
        let t = fit_tree(
            &TreeParams {
                max_depth: None,
                min_samples_split: 100,
            },
            &x,
            &y,
        );
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn tie_prefers_lower_threshold() {
        // Splitting at 0.5 or 2.5 isolates one point each; both score the same.
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![1, 0, 0, 1];
        let s = best_gini_split(&x, &y, &[0, 1, 2, 3], 0).unwrap();
        assert_eq!(s.threshold, 0.5);
    }

    #[test]
    fn forest_is_seed_deterministic() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![i as f64, ((i * 13) % 7) as f64, (i % 3) as f64])
            .collect();
        let y: Vec<u8> = (0..30).map(|i| u8::from(i > 14)).collect();
        let p = ForestParams {
            n_trees: 10,
            ..ForestParams::default()
        };
        assert_eq!(fit_forest(&p, &x, &y, 4), fit_forest(&p, &x, &y, 4));
        assert_ne!(fit_forest(&p, &x, &y, 4), fit_forest(&p, &x, &y, 5));
    }
}
