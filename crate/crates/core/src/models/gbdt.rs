//! Depth-limited gradient-boosted trees for logistic loss.
//!
//! Each round fits a regression tree to the first and second derivatives of
//! the loss (Newton leaves `-G / (H + lambda)`) and adds it with shrinkage.
//! If a round would raise the training loss, its leaf values are halved until
//! it does not, so the loss history never increases.

use serde::{Deserialize, Serialize};

use super::tree::{is_constant, sorted_by, Node, SplitChoice, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            rounds: 200,
            learning_rate: 0.1,
            max_depth: 2,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// Mean training log-loss before the first round and after every round.
    pub loss_history: Vec<f64>,
}

impl GbdtModel {
    pub fn score(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.value(row)).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.score(row) > 0.0)
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn mean_log_loss(scores: &[f64], y: &[u8]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(y)
        .map(|(&z, &t)| {
            let sp = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            sp - f64::from(t) * z
        })
        .sum();
    total / scores.len() as f64
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    g: &'a [f64],
    h: &'a [f64],
    params: GbdtParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn best_split(&self, idx: &[usize]) -> Option<SplitChoice> {
        let gt: f64 = idx.iter().map(|&i| self.g[i]).sum();
        let ht: f64 = idx.iter().map(|&i| self.h[i]).sum();
        let parent = self.score(gt, ht);
        let mut best: Option<SplitChoice> = None;
        for f in 0..self.x[0].len() {
            if is_constant(self.x, idx, f) {
                continue;
            }
            let sorted = sorted_by(self.x, idx, f);
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 1..sorted.len() {
                gl += self.g[sorted[k - 1]];
                hl += self.h[sorted[k - 1]];
                let (lo, hi) = (self.x[sorted[k - 1]][f], self.x[sorted[k]][f]);
                if lo == hi {
                    continue;
                }
                let gain = self.score(gl, hl) + self.score(gt - gl, ht - hl) - parent;
                if gain <= 1e-12 {
                    continue;
                }
                let cand = SplitChoice {
                    score: -gain,
                    feature: f,
                    threshold: lo + (hi - lo) / 2.0,
                };
                if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                    best = Some(cand);
                }
            }
        }
        best
    }

    fn build(&mut self, idx: &[usize], depth: usize) -> usize {
        let g: f64 = idx.iter().map(|&i| self.g[i]).sum();
        let h: f64 = idx.iter().map(|&i| self.h[i]).sum();
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: -self.params.learning_rate * g / (h + self.params.lambda),
        });
        if depth >= self.params.max_depth || idx.len() < 2 {
            return me;
        }
        let Some(split) = self.best_split(idx) else { return me };
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

fn scale_leaves(tree: &mut Tree, factor: f64) {
    for node in &mut tree.nodes {
        if let Node::Leaf { value } = node {
            *value *= factor;
        }
    }
}

pub(super) fn fit(p: &GbdtParams, x: &[Vec<f64>], y: &[u8]) -> GbdtModel {
    let n = x.len();
    let pos = y.iter().filter(|&&v| v == 1).count() as f64 / n as f64;
    let base_score = (pos / (1.0 - pos)).ln();
    let mut scores = vec![base_score; n];
    let mut loss = mean_log_loss(&scores, y);
    let mut loss_history = vec![loss];
    let idx: Vec<usize> = (0..n).collect();
    let mut trees = Vec::with_capacity(p.rounds);
    for _ in 0..p.rounds {
        let probs: Vec<f64> = scores.iter().map(|&z| sigmoid(z)).collect();
        let g: Vec<f64> = probs.iter().zip(y).map(|(p, &t)| p - f64::from(t)).collect();
        let h: Vec<f64> = probs.iter().map(|p| (p * (1.0 - p)).max(1e-16)).collect();
        let mut b = Builder {
            x,
            g: &g,
            h: &h,
            params: *p,
            nodes: Vec::new(),
        };
        b.build(&idx, 0);
        let mut tree = Tree { nodes: b.nodes };

        let mut accepted = false;
        for _ in 0..40 {
            let candidate: Vec<f64> = scores.iter().zip(x).map(|(s, row)| s + tree.value(row)).collect();
            let c_loss = mean_log_loss(&candidate, y);
            if c_loss <= loss {
                scores = candidate;
                loss = c_loss;
                accepted = true;
                break;
            }
            scale_leaves(&mut tree, 0.5);
        }
        if !accepted {
            scale_leaves(&mut tree, 0.0);
        }
        loss_history.push(loss);
        trees.push(tree);
    }
    GbdtModel {
        base_score,
        trees,
        loss_history,
    }
}
