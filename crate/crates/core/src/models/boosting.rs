//! Gradient boosting (first-order residual fit with Newton leaves) and the
//! XGBoost-style second-order variant with regularized gains.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, DecisionTree, LeafRule, Presorted, RowStats, SplitObjective, TreeParams};
use super::{check_binary, sigmoid};
use crate::data::Matrix;
use crate::error::Result;
use crate::rng;

const GBM_STREAM: u64 = 0x6B_0001;
const XGB_STREAM: u64 = 0x6B_0002;

/// Bound on a single leaf's log-odds step.
pub const LEAF_CLIP: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostVariant {
    Gbm,
    Xgb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbmConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub subsample: f64,
}

impl Default for GbmConfig {
    fn default() -> Self {
        GbmConfig {
            n_trees: 100,
            learning_rate: 0.1,
            max_depth: Some(3),
            min_leaf: 20,
            subsample: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct XgbConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: Option<usize>,
    pub lambda: f64,
    pub gamma: f64,
    pub subsample: f64,
    pub colsample: f64,
    pub min_leaf: usize,
}

impl Default for XgbConfig {
    fn default() -> Self {
        XgbConfig {
            n_trees: 100,
            learning_rate: 0.1,
            max_depth: Some(3),
            lambda: 1.0,
            gamma: 0.0,
            subsample: 1.0,
            colsample: 1.0,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub feature_names: Vec<String>,
    pub variant: BoostVariant,
    /// Log-odds of the training base rate.
    pub initial_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<DecisionTree>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
}

impl BoostedModel {
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        self.initial_score + self.learning_rate * sum
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.raw_score(row))
    }

    /// The model after its first `k` rounds.
    pub fn truncated(&self, k: usize) -> BoostedModel {
        BoostedModel {
            trees: self.trees[..k.min(self.trees.len())].to_vec(),
            ..self.clone()
        }
    }

    /// Total split gain per feature across all trees.
    pub fn gain_importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.feature_names.len()];
        for t in &self.trees {
            t.accumulate_gain(&mut imp);
        }
        imp
    }
}

fn base_log_odds(y: &[u8]) -> f64 {
    let p = y.iter().map(|&v| v as f64).sum::<f64>() / y.len() as f64;
    (p / (1.0 - p)).ln()
}

fn subsample_weights<R: Rng>(n: usize, fraction: f64, rng: &mut R) -> Vec<u32> {
    if fraction >= 1.0 {
        return vec![1; n];
    }
    let k = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut w = vec![0u32; n];
    for i in rand::seq::index::sample(rng, n, k) {
        w[i] = 1;
    }
    w
}

struct Round<'a> {
    x: &'a Matrix,
    presorted: &'a Presorted,
    scores: Vec<f64>,
}

impl Round<'_> {
    fn apply(&mut self, tree: &DecisionTree, learning_rate: f64) {
        for (i, s) in self.scores.iter_mut().enumerate() {
            *s += learning_rate * tree.predict_row(self.x.row(i));
        }
    }
}

pub fn train_gbm(x: &Matrix, y: &[u8], config: &GbmConfig, seed: u64) -> Result<BoostedModel> {
    check_binary(x, y)?;
    let n = x.n_rows();
    let initial = base_log_odds(y);
    let presorted = Presorted::new(x);
    let params = TreeParams {
        max_depth: config.max_depth,
        min_leaf: config.min_leaf,
        objective: SplitObjective::SquaredError,
        leaf: LeafRule::Newton { clip: LEAF_CLIP },
        max_features: None,
    };
    let mut state = Round {
        x,
        presorted: &presorted,
        scores: vec![initial; n],
    };
    let mut trees = Vec::with_capacity(config.n_trees);
    for t in 0..config.n_trees {
        let mut rng = rng::stream(seed, &[GBM_STREAM, t as u64]);
        let p: Vec<f64> = state.scores.iter().map(|&s| sigmoid(s)).collect();
        let resid: Vec<f64> = y.iter().zip(&p).map(|(&yi, pi)| yi as f64 - pi).collect();
        let hess: Vec<f64> = p.iter().map(|pi| pi * (1.0 - pi)).collect();
        let weight = subsample_weights(n, config.subsample, &mut rng);
        let tree = grow_tree(
            x,
            state.presorted,
            RowStats {
                g: &resid,
                h: &hess,
                weight: &weight,
            },
            &params,
            None,
            &mut rng,
        );
        state.apply(&tree, config.learning_rate);
        trees.push(tree);
    }
    Ok(BoostedModel {
        feature_names: x.names().to_vec(),
        variant: BoostVariant::Gbm,
        initial_score: initial,
        learning_rate: config.learning_rate,
        trees,
        lambda: None,
        gamma: None,
    })
}

pub fn train_xgb(x: &Matrix, y: &[u8], config: &XgbConfig, seed: u64) -> Result<BoostedModel> {
    check_binary(x, y)?;
    let n = x.n_rows();
    let p_feat = x.n_cols();
    let initial = base_log_odds(y);
    let presorted = Presorted::new(x);
    let params = TreeParams {
        max_depth: config.max_depth,
        min_leaf: config.min_leaf,
        objective: SplitObjective::Regularized {
            lambda: config.lambda,
            gamma: config.gamma,
        },
        leaf: LeafRule::Regularized { lambda: config.lambda },
        max_features: None,
    };
    let mut state = Round {
        x,
        presorted: &presorted,
        scores: vec![initial; n],
    };
    let mut trees = Vec::with_capacity(config.n_trees);
    for t in 0..config.n_trees {
        let mut rng = rng::stream(seed, &[XGB_STREAM, t as u64]);
        let p: Vec<f64> = state.scores.iter().map(|&s| sigmoid(s)).collect();
        let grad: Vec<f64> = y.iter().zip(&p).map(|(&yi, pi)| pi - yi as f64).collect();
        let hess: Vec<f64> = p.iter().map(|pi| pi * (1.0 - pi)).collect();
        let weight = subsample_weights(n, config.subsample, &mut rng);
        let pool: Option<Vec<usize>> = (config.colsample < 1.0 && p_feat > 0).then(|| {
            let k = ((config.colsample * p_feat as f64).round() as usize).clamp(1, p_feat);
            let mut f = rand::seq::index::sample(&mut rng, p_feat, k).into_vec();
            f.sort_unstable();
            f
        });
        let tree = grow_tree(
            x,
            state.presorted,
            RowStats {
                g: &grad,
                h: &hess,
                weight: &weight,
            },
            &params,
            pool.as_deref(),
            &mut rng,
        );
        state.apply(&tree, config.learning_rate);
        trees.push(tree);
    }
    Ok(BoostedModel {
        feature_names: x.names().to_vec(),
        variant: BoostVariant::Xgb,
        initial_score: initial,
        learning_rate: config.learning_rate,
        trees,
        lambda: Some(config.lambda),
        gamma: Some(config.gamma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Matrix, Vec<u8>) {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 - 9.5).collect();
        let y: Vec<u8> = xs.iter().map(|&v| (v >= 0.0) as u8).collect();
        (Matrix::new(vec!["x".into()], xs, 20).unwrap(), y)
    }

    fn log_loss(m: &BoostedModel, x: &Matrix, y: &[u8]) -> f64 {
        x.rows()
            .zip(y)
            .map(|(r, &t)| {
                let p = m.predict_row(r);
                -(t as f64 * p.ln() + (1.0 - t as f64) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / y.len() as f64
    }

    #[test]
    fn balanced_base_rate_starts_at_zero() {
        let (x, y) = separable();
        let m = train_gbm(&x, &y, &GbmConfig { n_trees: 0, ..GbmConfig::default() }, 1).unwrap();
        assert_eq!(m.initial_score, 0.0);
        assert_eq!(m.predict_row(&[3.0]), 0.5);
    }

    #[test]
    fn zero_rounds_predict_base_rate() {
        let x = Matrix::new(vec!["x".into()], vec![0.0, 1.0, 2.0, 3.0], 4).unwrap();
        let y = [0, 0, 0, 1];
        let m = train_gbm(&x, &y, &GbmConfig { n_trees: 0, ..GbmConfig::default() }, 1).unwrap();
        for r in x.rows() {
            assert!((m.predict_row(r) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn one_stump_round_reduces_log_loss() {
        let (x, y) = separable();
        let cfg = GbmConfig {
            n_trees: 1,
            learning_rate: 1.0,
            max_depth: Some(1),
            min_leaf: 1,
            subsample: 1.0,
        };
        let m = train_gbm(&x, &y, &cfg, 1).unwrap();
        let before = log_loss(&m.truncated(0), &x, &y);
        let after = log_loss(&m, &x, &y);
        assert!((before - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(after < before);
        // pure leaves: residual sum / hessian sum = ±0.5 / 0.25 = ±2
        assert!((m.raw_score(&[5.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn huge_gamma_keeps_single_leaves() {
        let (x, y) = separable();
        let cfg = XgbConfig { gamma: 1e6, n_trees: 5, ..XgbConfig::default() };
        let m = train_xgb(&x, &y, &cfg, 1).unwrap();
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
        for r in x.rows() {
            assert!((m.predict_row(r) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_lambda_is_near_intercept_only() {
        let (x, y) = separable();
        let cfg = XgbConfig { lambda: 1e12, n_trees: 10, ..XgbConfig::default() };
        let m = train_xgb(&x, &y, &cfg, 1).unwrap();
        for r in x.rows() {
            assert!((m.predict_row(r) - 0.5).abs() < 1e-9);
        }
    }
}
