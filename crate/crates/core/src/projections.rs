//! Separability projections: Fisher LDA, PCA and exact t-SNE, plus SVG scatters.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Lda,
    Pca,
    Tsne,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explained_variance_ratio: Option<Vec<f64>>,
    /// Component / direction vectors in input-feature space.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kl_divergence: Option<f64>,
    /// KL divergence at the first iteration after early exaggeration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kl_after_exaggeration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub kind: EmbeddingKind,
    /// n rows of k coordinates.
    pub coords: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub meta: EmbeddingMeta,
}

impl Embedding {
    pub fn dims(&self) -> usize {
        match self.kind {
            EmbeddingKind::Lda => 1,
            _ => 2,
        }
    }

    /// `x,y,label` CSV; one-dimensional embeddings get `y = 0`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,label\n");
        for (c, l) in self.coords.iter().zip(&self.labels) {
            let y = c.get(1).copied().unwrap_or(0.0);
            let _ = writeln!(out, "{},{},{}", c[0], y, l);
        }
        out
    }
}

fn to_matrix(x: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = x.len();
    let d = x.first().map_or(0, Vec::len);
    for (r, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: d,
            });
        }
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { row: r, col: c });
        }
    }
    Ok(DMatrix::from_fn(n, d, |i, j| x[i][j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardization {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let d = x.first().map_or(0, Vec::len);
        let mut means = vec![0.0; d];
        let mut stds = vec![0.0; d];
        for j in 0..d {
            let mean = x.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let ss: f64 = x.iter().map(|r| (r[j] - mean).powi(2)).sum();
            let std = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
            means[j] = mean;
            // Columns this flat are treated as constant.
            stds[j] = if std > 1e-12 * (1.0 + mean.abs()) { std } else { 0.0 };
        }
        Standardization { means, stds }
    }

    pub fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let c = v - self.means[j];
                        if self.stds[j] > 0.0 {
                            c / self.stds[j]
                        } else {
                            c
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Center each column and scale it to unit sample standard deviation (n-1);
/// zero-variance columns are only centered.
pub fn standardize(x: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Standardization)> {
    if x.len() < 2 {
        return Err(Error::TooFewRows { got: x.len(), need: 2 });
    }
    to_matrix(x)?;
    let s = Standardization::fit(x);
    Ok((s.apply(x), s))
}

/// Make the largest-magnitude entry of `v` positive (first one on ties).
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&b| b < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Principal components of the centered data (sample covariance).
pub fn pca(x: &[Vec<f64>], labels: &[u8], k: usize) -> Result<Embedding> {
    let m = to_matrix(x)?;
    let (n, d) = m.shape();
    if n < 2 {
        return Err(Error::TooFewRows { got: n, need: 2 });
    }
    if k == 0 || k > d {
        return Err(Error::InvalidInput(format!(
            "cannot take {k} components of {d} features"
        )));
    }
    check_labels(labels, n)?;
    let means = m.row_mean();
    let centered = DMatrix::from_fn(n, d, |i, j| m[(i, j)] - means[j]);
    let cov = centered.transpose() * &centered / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let total: f64 = eig.eigenvalues.iter().map(|&l| l.max(0.0)).sum();

    let mut components = Vec::with_capacity(k);
    let mut ratios = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        fix_sign(&mut v);
        components.push(v);
        let lambda = eig.eigenvalues[idx].max(0.0);
        ratios.push(if total > 0.0 { lambda / total } else { 0.0 });
    }
    let coords = (0..n)
        .map(|i| {
            components
                .iter()
                .map(|c| (0..d).map(|j| centered[(i, j)] * c[j]).sum())
                .collect()
        })
        .collect();
    Ok(Embedding {
        kind: EmbeddingKind::Pca,
        coords,
        labels: labels.to_vec(),
        meta: EmbeddingMeta {
            explained_variance_ratio: Some(ratios),
            components: Some(components),
            ..EmbeddingMeta::default()
        },
    })
}

fn check_labels(labels: &[u8], n: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: n,
        });
    }
    Ok(())
}

/// Two-class Fisher discriminant. Coordinates are projections of the data
/// centered at the overall mean onto the unit direction `Sw^-1 (mu1 - mu0)`,
/// so the injection-class mean lands on the positive side.
pub fn lda(x: &[Vec<f64>], labels: &[u8]) -> Result<Embedding> {
    let m = to_matrix(x)?;
    let (n, d) = m.shape();
    check_labels(labels, n)?;
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    if n1 == 0 || n1 == n {
        return Err(Error::SingleClass(" in LDA input".into()));
    }
    if n < d + 2 {
        return Err(Error::TooFewRows { got: n, need: d + 2 });
    }
    let mut mu = [DVector::<f64>::zeros(d), DVector::<f64>::zeros(d)];
    let mut counts = [0usize; 2];
    for (i, &l) in labels.iter().enumerate() {
        let c = usize::from(l == 1);
        mu[c] += m.row(i).transpose();
        counts[c] += 1;
    }
    for c in 0..2 {
        mu[c] /= counts[c] as f64;
    }
    let mut sw = DMatrix::<f64>::zeros(d, d);
    for (i, &l) in labels.iter().enumerate() {
        let diff = m.row(i).transpose() - &mu[usize::from(l == 1)];
        sw += &diff * diff.transpose();
    }
    let trace = sw.trace();
    let eps = if trace > 0.0 { 1e-6 * trace / d as f64 } else { 1e-6 };
    for j in 0..d {
        sw[(j, j)] += eps;
    }
    let delta = &mu[1] - &mu[0];
    let w = match sw.clone().cholesky() {
        Some(ch) => ch.solve(&delta),
        None => sw
            .lu()
            .solve(&delta)
            .ok_or_else(|| Error::InvalidInput("within-class scatter is singular".into()))?,
    };
    let norm = w.norm();
    let w = if norm > 0.0 { w / norm } else { w };
    let overall = m.row_mean();
    let coords = (0..n)
        .map(|i| vec![(0..d).map(|j| (m[(i, j)] - overall[j]) * w[j]).sum()])
        .collect();
    Ok(Embedding {
        kind: EmbeddingKind::Lda,
        coords,
        labels: labels.to_vec(),
        meta: EmbeddingMeta {
            components: Some(vec![w.iter().copied().collect()]),
            ..EmbeddingMeta::default()
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            seed: 0,
        }
    }
}

const ENTROPY_TOL: f64 = 1e-5;
const BANDWIDTH_STEPS: usize = 50;
const MIN_GAIN: f64 = 0.01;

fn squared_distances(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n * n];
    d.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, out) in row.iter_mut().enumerate() {
            *out = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    });
    d
}

/// Conditional distribution of row `i` for precision `beta`; returns entropy (nats).
fn conditional_row(dist: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let mut sum = 0.0;
    for (j, p) in out.iter_mut().enumerate() {
        *p = if j == i { 0.0 } else { (-dist[j] * beta).exp() };
        sum += *p;
    }
    if sum <= 0.0 {
        // All mass underflowed: fall back to uniform over the other points.
        let u = 1.0 / (out.len() - 1) as f64;
        for (j, p) in out.iter_mut().enumerate() {
            *p = if j == i { 0.0 } else { u };
        }
        return ((out.len() - 1) as f64).ln();
    }
    let mut weighted = 0.0;
    for (j, p) in out.iter_mut().enumerate() {
        weighted += dist[j] * *p;
        *p /= sum;
    }
    sum.ln() + beta * weighted / sum
}

/// Binary search of each point's precision to hit `ln(perplexity)` entropy.
fn joint_probabilities(x: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = x.len();
    let dist = squared_distances(x);
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    p.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let di = &dist[i * n..(i + 1) * n];
        let (mut beta, mut lo, mut hi) = (1.0f64, f64::NEG_INFINITY, f64::INFINITY);
        for _ in 0..BANDWIDTH_STEPS {
            let h = conditional_row(di, i, beta, row);
            let diff = h - target;
            if diff.abs() < ENTROPY_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
            }
        }
    });
    let mut joint = vec![0.0; n * n];
    let scale = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            joint[i * n + j] = ((p[i * n + j] + p[j * n + i]) / scale).max(1e-12);
        }
    }
    joint
}

/// Student-t affinities: returns unnormalized numerators and their sum (Z).
fn affinities(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    num.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, out) in row.iter_mut().enumerate() {
            if i != j {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                *out = 1.0 / (1.0 + dx * dx + dy * dy);
            }
        }
    });
    // Row sums first, then a fixed-order total, so the result does not depend on threads.
    let row_sums: Vec<f64> = num.par_chunks(n).map(|r| r.iter().sum()).collect();
    let z = row_sums.iter().sum();
    (num, z)
}

fn kl_divergence(p: &[f64], num: &[f64], z: f64, n: usize) -> f64 {
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let pij = p[i * n + j];
                let qij = (num[i * n + j] / z).max(1e-12);
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl
}

/// Exact O(n^2) t-SNE to two dimensions.
pub fn tsne(x: &[Vec<f64>], labels: &[u8], cfg: &TsneConfig) -> Result<Embedding> {
    to_matrix(x)?;
    let n = x.len();
    check_labels(labels, n)?;
    if n < 4 {
        return Err(Error::TooFewRows { got: n, need: 4 });
    }
    if cfg.perplexity.is_nan() || cfg.perplexity <= 0.0 || cfg.perplexity >= n as f64 {
        return Err(Error::PerplexityTooLarge {
            perplexity: cfg.perplexity,
            n,
        });
    }
    let p = joint_probabilities(x, cfg.perplexity);

    let mut rng = seed::rng(cfg.seed);
    let init = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [init.sample(&mut rng), init.sample(&mut rng)]).collect();
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut kl_after_exaggeration = None;

    for iter in 0..cfg.iterations {
        let exaggeration = if iter < cfg.exaggeration_iterations {
            cfg.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < cfg.exaggeration_iterations {
            cfg.initial_momentum
        } else {
            cfg.final_momentum
        };
        let (num, z) = affinities(&y);
        if iter == cfg.exaggeration_iterations {
            kl_after_exaggeration = Some(kl_divergence(&p, &num, z, n));
        }
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0, 0.0];
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let w = num[i * n + j];
                    let mult = (exaggeration * p[i * n + j] - w / z) * w;
                    g[0] += 4.0 * mult * (y[i][0] - y[j][0]);
                    g[1] += 4.0 * mult * (y[i][1] - y[j][1]);
                }
                g
            })
            .collect();
        for i in 0..n {
            for k in 0..2 {
                let same_sign = (grad[i][k] > 0.0) == (velocity[i][k] > 0.0);
                gains[i][k] = if same_sign {
                    gains[i][k] * 0.8
                } else {
                    gains[i][k] + 0.2
                };
                gains[i][k] = gains[i][k].max(MIN_GAIN);
                velocity[i][k] = momentum * velocity[i][k] - cfg.learning_rate * gains[i][k] * grad[i][k];
                y[i][k] += velocity[i][k];
            }
        }
        for k in 0..2 {
            let mean = y.iter().map(|p| p[k]).sum::<f64>() / n as f64;
            y.iter_mut().for_each(|p| p[k] -= mean);
        }
    }
    let (num, z) = affinities(&y);
    let kl = kl_divergence(&p, &num, z, n);
    Ok(Embedding {
        kind: EmbeddingKind::Tsne,
        coords: y.iter().map(|p| p.to_vec()).collect(),
        labels: labels.to_vec(),
        meta: EmbeddingMeta {
            kl_divergence: Some(kl),
            kl_after_exaggeration,
            seed: Some(cfg.seed),
            ..EmbeddingMeta::default()
        },
    })
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 50.0;

fn fmt_tick(v: f64) -> String {
    format!("{v:.3}")
}

/// Self-contained SVG scatter: blue = benign (0), red = injection (1).
/// One-dimensional embeddings are spread over a seeded jitter ordinate.
pub fn scatter_svg(e: &Embedding, jitter_seed: u64) -> String {
    let mut rng = seed::rng(jitter_seed);
    let points: Vec<(f64, f64)> = e
        .coords
        .iter()
        .map(|c| match c.get(1) {
            Some(&y) if e.dims() > 1 => (c[0], y),
            _ => (c[0], rng.random_range(-1.0..1.0)),
        })
        .collect();
    let range = |sel: fn(&(f64, f64)) -> f64| {
        let (lo, hi) = points
            .iter()
            .map(sel)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = range(|p| p.0);
    let (y0, y1) = range(|p| p.1);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (SVG_W - 2.0 * MARGIN);
    let sy = |y: f64| SVG_H - MARGIN - (y - y0) / (y1 - y0) * (SVG_H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (bx, by) = (MARGIN, SVG_H - MARGIN);
    let _ = writeln!(
        s,
        r#"<line x1="{bx}" y1="{by}" x2="{}" y2="{by}" stroke="black"/>"#,
        SVG_W - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line x1="{bx}" y1="{by}" x2="{bx}" y2="{MARGIN}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{bx}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
        by + 16.0,
        fmt_tick(x0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
        SVG_W - MARGIN,
        by + 16.0,
        fmt_tick(x1)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{by}" font-size="11" text-anchor="end">{}</text>"#,
        bx - 4.0,
        fmt_tick(y0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{MARGIN}" font-size="11" text-anchor="end">{}</text>"#,
        bx - 4.0,
        fmt_tick(y1)
    );
    for (&(x, y), &l) in points.iter().zip(&e.labels) {
        let color = if l == 1 { "red" } else { "blue" };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}" fill-opacity="0.6"/>"#,
            sx(x),
            sy(y)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_scatter_svg(e: &Embedding, path: &Path, jitter_seed: u64) -> Result<()> {
    fs::write(path, scatter_svg(e, jitter_seed)).map_err(|err| Error::io(path, err))
}
