use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_binary;
use super::tree::{grow_tree, DecisionTree, Presorted, RowStats, TreeParams};
use crate::data::Matrix;
use crate::error::Result;
use crate::rng;

const FOREST_STREAM: u64 = 0xF0_2E57;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Voting {
    /// Mean of the leaf class-1 proportions.
    #[default]
    Soft,
    /// Share of trees whose leaf proportion exceeds one half.
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(p))`.
    pub mtry: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub voting: Voting,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            mtry: None,
            max_depth: None,
            min_leaf: 1,
            bootstrap: true,
            voting: Voting::Soft,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub feature_names: Vec<String>,
    pub trees: Vec<DecisionTree>,
    pub mtry: usize,
    pub voting: Voting,
    pub seed: u64,
}

impl ForestModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.5;
        }
        let total: f64 = match self.voting {
            Voting::Soft => self.trees.iter().map(|t| t.predict_row(row)).sum(),
            Voting::Hard => self
                .trees
                .iter()
                .map(|t| if t.predict_row(row) > 0.5 { 1.0 } else { 0.0 })
                .sum(),
        };
        total / self.trees.len() as f64
    }
}

pub fn default_mtry(p: usize) -> usize {
    (p as f64).sqrt().ceil().max(1.0) as usize
}

pub fn train_random_forest(x: &Matrix, y: &[u8], config: &ForestConfig, seed: u64) -> Result<ForestModel> {
    check_binary(x, y)?;
    let p = x.n_cols();
    let n = x.n_rows();
    let mtry = config.mtry.unwrap_or_else(|| default_mtry(p)).clamp(1, p.max(1));
    let presorted = Presorted::new(x);
    let g: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let h = vec![1.0; n];
    let params = TreeParams {
        max_features: Some(mtry),
        ..TreeParams::classification(config.max_depth, config.min_leaf)
    };
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, &[FOREST_STREAM, t as u64]);
            let mut weight = vec![0u32; n];
            if config.bootstrap {
                for _ in 0..n {
                    weight[rng.random_range(0..n)] += 1;
                }
            } else {
                weight.fill(1);
            }
            grow_tree(
                x,
                &presorted,
                RowStats {
                    g: &g,
                    h: &h,
                    weight: &weight,
                },
                &params,
                None,
                &mut rng,
            )
        })
        .collect();
    Ok(ForestModel {
        feature_names: x.names().to_vec(),
        trees,
        mtry,
        voting: config.voting,
        seed,
    })
}
