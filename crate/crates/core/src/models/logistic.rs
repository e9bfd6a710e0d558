//! Logistic regression fitted by Newton-Raphson (IRLS) with a tiny ridge.

use serde::{Deserialize, Serialize};

use super::{check_binary, sigmoid, softplus};
use crate::data::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    /// Converged once the largest coefficient change falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Penalty `ridge * ||w||^2` on the slopes (not the intercept).
    pub ridge: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            tol: 1e-8,
            max_iter: 100,
            ridge: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub n_iter: usize,
}

impl LogisticModel {
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(row))
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix
/// stored row-major, or `None` when a pivot is not positive.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i * n + i];
    }
    x
}

struct Problem<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    ridge: f64,
}

impl Problem<'_> {
    fn eta(&self, beta: &[f64], row: &[f64]) -> f64 {
        beta[0] + beta[1..].iter().zip(row).map(|(b, v)| b * v).sum::<f64>()
    }

    fn objective(&self, beta: &[f64]) -> f64 {
        let ll: f64 = self
            .x
            .rows()
            .zip(self.y)
            .map(|(r, &y)| {
                let e = self.eta(beta, r);
                y as f64 * e - softplus(e)
            })
            .sum();
        ll - self.ridge * beta[1..].iter().map(|b| b * b).sum::<f64>()
    }

    /// Gradient and negated Hessian of the penalized log-likelihood.
    fn newton_system(&self, beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = beta.len();
        let mut grad = vec![0.0; k];
        let mut hess = vec![0.0; k * k];
        let mut z = vec![0.0; k];
        z[0] = 1.0;
        for (r, &y) in self.x.rows().zip(self.y) {
            z[1..].copy_from_slice(r);
            let p = sigmoid(self.eta(beta, r));
            let resid = y as f64 - p;
            let w = p * (1.0 - p);
            for a in 0..k {
                grad[a] += z[a] * resid;
                let wa = w * z[a];
                for b in 0..=a {
                    hess[a * k + b] += wa * z[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                hess[b * k + a] = hess[a * k + b];
            }
        }
        for a in 1..k {
            grad[a] -= 2.0 * self.ridge * beta[a];
            hess[a * k + a] += 2.0 * self.ridge;
        }
        (grad, hess)
    }
}

pub fn train_logistic(x: &Matrix, y: &[u8], config: &LogisticConfig) -> Result<LogisticModel> {
    check_binary(x, y)?;
    let k = x.n_cols() + 1;
    let problem = Problem {
        x,
        y,
        ridge: config.ridge,
    };
    let mut beta = vec![0.0; k];
    let mut current = problem.objective(&beta);
    let mut converged = false;
    let mut n_iter = 0;
    while n_iter < config.max_iter {
        n_iter += 1;
        let (grad, hess) = problem.newton_system(&beta);
        let l = cholesky(&hess, k).ok_or(Error::SingularHessian)?;
        let step = cholesky_solve(&l, k, &grad);
        // step halving keeps the penalized likelihood from decreasing
        let mut scale = 1.0;
        let mut candidate: Vec<f64>;
        let mut value;
        loop {
            candidate = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            value = problem.objective(&candidate);
            if value >= current - 1e-12 * current.abs() || scale < 1e-10 {
                break;
            }
            scale *= 0.5;
        }
        let max_change = beta
            .iter()
            .zip(&candidate)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        beta = candidate;
        current = value;
        if !beta.iter().all(|b| b.is_finite()) {
            return Err(Error::SingularHessian);
        }
        if max_change < config.tol {
            converged = true;
            break;
        }
    }
    Ok(LogisticModel {
        feature_names: x.names().to_vec(),
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
        converged,
        n_iter,
    })
}
