//! L2-regularized logistic regression by full-batch gradient descent with
//! Armijo backtracking.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    /// Penalty on the squared weight norm (the intercept is not penalized).
    pub lambda: f64,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            lambda: 1.0,
            tolerance: 1e-8,
            max_iterations: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl LogisticModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.decision(row) > 0.0)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Objective `sum_i [log(1 + e^{z_i}) - y_i z_i] + lambda/2 |w|^2` with
/// `z_i = b + w.x_i`, and its gradient. `params` is `[w..., b]`.
pub fn logistic_objective(params: &[f64], x: &[Vec<f64>], y: &[u8], lambda: f64) -> (f64, Vec<f64>) {
    let d = params.len() - 1;
    let (w, b) = (&params[..d], params[d]);
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (row, &label) in x.iter().zip(y) {
        let z = b + w.iter().zip(row).map(|(a, v)| a * v).sum::<f64>();
        let t = f64::from(label);
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for j in 0..d {
            grad[j] += r * row[j];
        }
        grad[d] += r;
    }
    for j in 0..d {
        loss += 0.5 * lambda * w[j] * w[j];
        grad[j] += lambda * w[j];
    }
    (loss, grad)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum::<f64>().sqrt()
}

pub(super) fn fit(p: &LogisticParams, x: &[Vec<f64>], y: &[u8]) -> LogisticModel {
    let d = x[0].len();
    let mut theta = vec![0.0; d + 1];
    let (mut loss, mut grad) = logistic_objective(&theta, x, y, p.lambda);
    let mut step = 1.0;
    let mut iterations = 0;
    while iterations < p.max_iterations && norm(&grad) >= p.tolerance {
        iterations += 1;
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        let mut accepted = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let (c_loss, c_grad) = logistic_objective(&candidate, x, y, p.lambda);
            // Near the optimum the decrease drops below the objective's rounding
            // error; there a step counts if it shrinks the gradient instead.
            let armijo = c_loss <= loss - 0.5 * step * g2;
            let flat = c_loss <= loss + 4.0 * f64::EPSILON * loss.abs() && norm(&c_grad) < g2.sqrt();
            if armijo || flat {
                theta = candidate;
                loss = c_loss;
                grad = c_grad;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No representable descent step remains.
            break;
        }
        step *= 2.0;
    }
    LogisticModel {
        weights: theta[..d].to_vec(),
        intercept: theta[d],
        iterations,
        gradient_norm: norm(&grad),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_to_small_gradient() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 - 20.0) / 10.0, ((i * 7) % 5) as f64])
            .collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from(i % 3 != 0 && i > 15)).collect();
        let m = fit(&LogisticParams::default(), &x, &y);
        assert!(m.gradient_norm < 1e-8, "gradient norm {}", m.gradient_norm);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-12);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
