//! Model families behind a single prediction interface.

mod boosting;
mod forest;
mod logistic;
mod search;
pub mod tree;
mod woe_logistic;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use boosting::{train_gbm, train_xgb, BoostVariant, BoostedModel, GbmConfig, XgbConfig, LEAF_CLIP};
pub use forest::{default_mtry, train_random_forest, ForestConfig, ForestModel, Voting};
pub use logistic::{train_logistic, LogisticConfig, LogisticModel};
pub use search::{random_search, HyperParamSpace, ParamRange, SearchOutcome, Trial};
pub use tree::{DecisionTree, TreeParams};
pub use woe_logistic::{train_woe_logistic, WoeLogisticConfig, WoeLogisticModel};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn check_binary(x: &Matrix, y: &[u8]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch(format!("{} rows vs {} labels", x.n_rows(), y.len())));
    }
    let bad = y.iter().filter(|&&v| v == 1).count();
    if bad == 0 || bad == y.len() {
        return Err(Error::OneClassOnly);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    WoeLogistic,
    Tree,
    #[serde(rename = "rf")]
    RandomForest,
    Gbm,
    Xgb,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Logistic,
        ModelKind::WoeLogistic,
        ModelKind::Tree,
        ModelKind::RandomForest,
        ModelKind::Gbm,
        ModelKind::Xgb,
    ];

    /// The five families compared in the study.
    pub const COMPARED: [ModelKind; 5] = [
        ModelKind::Logistic,
        ModelKind::WoeLogistic,
        ModelKind::RandomForest,
        ModelKind::Gbm,
        ModelKind::Xgb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::WoeLogistic => "woe_logistic",
            ModelKind::Tree => "tree",
            ModelKind::RandomForest => "rf",
            ModelKind::Gbm => "gbm",
            ModelKind::Xgb => "xgb",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model family '{s}'")))
    }
}

/// Anything that maps a feature row to a probability of the bad class.
pub trait Predictor: Send + Sync {
    fn kind(&self) -> ModelKind;

    fn feature_names(&self) -> &[String];

    /// `row` is laid out in `feature_names` order. Output lies in `[0, 1]`.
    fn predict_row(&self, row: &[f64]) -> f64;

    /// Scores every row of `x`, locating features by name; extra columns are
    /// ignored.
    fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        let names = self.feature_names();
        if x.names() == names {
            return Ok((0..x.n_rows()).into_par_iter().map(|i| self.predict_row(x.row(i))).collect());
        }
        let idx = names
            .iter()
            .map(|n| x.col_index(n).ok_or_else(|| Error::FeatureMismatch(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map_init(
                || vec![0.0; idx.len()],
                |buf, i| {
                    let r = x.row(i);
                    for (b, &j) in buf.iter_mut().zip(&idx) {
                        *b = r[j];
                    }
                    self.predict_row(buf)
                },
            )
            .collect())
    }
}

/// A single classification tree used directly as a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub feature_names: Vec<String>,
    pub tree: DecisionTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: Some(6),
            min_leaf: 20,
        }
    }
}

pub fn train_tree(x: &Matrix, y: &[u8], config: &TreeConfig) -> Result<TreeModel> {
    check_binary(x, y)?;
    let g: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let h = vec![1.0; y.len()];
    let w = vec![1u32; y.len()];
    let tree = tree::grow_tree(
        x,
        &tree::Presorted::new(x),
        tree::RowStats {
            g: &g,
            h: &h,
            weight: &w,
        },
        &TreeParams::classification(config.max_depth, config.min_leaf),
        None,
        &mut crate::rng::stream(0, &[]),
    );
    Ok(TreeModel {
        feature_names: x.names().to_vec(),
        tree,
    })
}

/// Training configuration for one model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Logistic(LogisticConfig),
    WoeLogistic(WoeLogisticConfig),
    Tree(TreeConfig),
    #[serde(rename = "rf")]
    RandomForest(ForestConfig),
    Gbm(GbmConfig),
    Xgb(XgbConfig),
}

fn as_count(key: &str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidParameter(format!("{key} = {v} is not a count")))
    }
}

/// Depth 0 means unlimited.
fn as_depth(v: f64) -> Result<Option<usize>> {
    let d = as_count("max_depth", v)?;
    Ok((d > 0).then_some(d))
}

impl ModelSpec {
    pub fn default_for(kind: ModelKind) -> ModelSpec {
        match kind {
            ModelKind::Logistic => ModelSpec::Logistic(LogisticConfig::default()),
            ModelKind::WoeLogistic => ModelSpec::WoeLogistic(WoeLogisticConfig::default()),
            ModelKind::Tree => ModelSpec::Tree(TreeConfig::default()),
            ModelKind::RandomForest => ModelSpec::RandomForest(ForestConfig::default()),
            ModelKind::Gbm => ModelSpec::Gbm(GbmConfig::default()),
            ModelKind::Xgb => ModelSpec::Xgb(XgbConfig::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Logistic(_) => ModelKind::Logistic,
            ModelSpec::WoeLogistic(_) => ModelKind::WoeLogistic,
            ModelSpec::Tree(_) => ModelKind::Tree,
            ModelSpec::RandomForest(_) => ModelKind::RandomForest,
            ModelSpec::Gbm(_) => ModelKind::Gbm,
            ModelSpec::Xgb(_) => ModelKind::Xgb,
        }
    }

    /// Copy of this spec with named hyperparameters overridden.
    pub fn with_params(&self, params: &BTreeMap<String, f64>) -> Result<ModelSpec> {
        let mut spec = self.clone();
        for (key, &v) in params {
            let k = key.as_str();
            let unknown = || Error::InvalidParameter(format!("'{k}' is not a {} hyperparameter", self.kind()));
            match &mut spec {
                ModelSpec::Logistic(c) => match k {
                    "ridge" => c.ridge = v,
                    "max_iter" => c.max_iter = as_count(k, v)?,
                    _ => return Err(unknown()),
                },
                ModelSpec::WoeLogistic(c) => match k {
                    "max_bins" => c.binning.max_bins = as_count(k, v)?,
                    "min_bin_frac" => c.binning.min_bin_frac = v,
                    "smoothing" => c.binning.smoothing = v,
                    "ridge" => c.logistic.ridge = v,
                    _ => return Err(unknown()),
                },
                ModelSpec::Tree(c) => match k {
                    "max_depth" => c.max_depth = as_depth(v)?,
                    "min_leaf" => c.min_leaf = as_count(k, v)?,
                    _ => return Err(unknown()),
                },
                ModelSpec::RandomForest(c) => match k {
                    "n_trees" => c.n_trees = as_count(k, v)?,
                    "mtry" => c.mtry = Some(as_count(k, v)?),
                    "max_depth" => c.max_depth = as_depth(v)?,
                    "min_leaf" => c.min_leaf = as_count(k, v)?,
                    _ => return Err(unknown()),
                },
                ModelSpec::Gbm(c) => match k {
                    "n_trees" => c.n_trees = as_count(k, v)?,
                    "learning_rate" => c.learning_rate = v,
                    "max_depth" => c.max_depth = as_depth(v)?,
                    "min_leaf" => c.min_leaf = as_count(k, v)?,
                    "subsample" => c.subsample = v,
                    _ => return Err(unknown()),
                },
                ModelSpec::Xgb(c) => match k {
                    "n_trees" => c.n_trees = as_count(k, v)?,
                    "learning_rate" => c.learning_rate = v,
                    "max_depth" => c.max_depth = as_depth(v)?,
                    "lambda" => c.lambda = v,
                    "gamma" => c.gamma = v,
                    "subsample" => c.subsample = v,
                    "colsample" => c.colsample = v,
                    "min_leaf" => c.min_leaf = as_count(k, v)?,
                    _ => return Err(unknown()),
                },
            }
        }
        Ok(spec)
    }

    pub fn fit(&self, x: &Matrix, y: &[u8], seed: u64) -> Result<FittedModel> {
        Ok(match self {
            ModelSpec::Logistic(c) => FittedModel::Logistic(train_logistic(x, y, c)?),
            ModelSpec::WoeLogistic(c) => FittedModel::WoeLogistic(train_woe_logistic(x, y, c)?),
            ModelSpec::Tree(c) => FittedModel::Tree(train_tree(x, y, c)?),
            ModelSpec::RandomForest(c) => FittedModel::RandomForest(train_random_forest(x, y, c, seed)?),
            ModelSpec::Gbm(c) => FittedModel::Boosted(train_gbm(x, y, c, seed)?),
            ModelSpec::Xgb(c) => FittedModel::Boosted(train_xgb(x, y, c, seed)?),
        })
    }
}

/// A trained model of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedModel {
    Logistic(LogisticModel),
    WoeLogistic(WoeLogisticModel),
    Tree(TreeModel),
    RandomForest(ForestModel),
    Boosted(BoostedModel),
}

impl FittedModel {
    /// Whether the fitted model can react to feature `j` at all.
    pub fn uses_feature(&self, j: usize) -> bool {
        match self {
            FittedModel::Logistic(m) => m.coefficients[j] != 0.0,
            FittedModel::WoeLogistic(m) => m.logistic.coefficients[j] != 0.0 && m.tables[j].spec.total_bins() > 1,
            FittedModel::Tree(m) => m.tree.uses_feature(j),
            FittedModel::RandomForest(m) => m.trees.iter().any(|t| t.uses_feature(j)),
            FittedModel::Boosted(m) => m.trees.iter().any(|t| t.uses_feature(j)),
        }
    }
}

impl Predictor for FittedModel {
    fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Logistic(_) => ModelKind::Logistic,
            FittedModel::WoeLogistic(_) => ModelKind::WoeLogistic,
            FittedModel::Tree(_) => ModelKind::Tree,
            FittedModel::RandomForest(_) => ModelKind::RandomForest,
            FittedModel::Boosted(m) => match m.variant {
                BoostVariant::Gbm => ModelKind::Gbm,
                BoostVariant::Xgb => ModelKind::Xgb,
            },
        }
    }

    fn feature_names(&self) -> &[String] {
        match self {
            FittedModel::Logistic(m) => &m.feature_names,
            FittedModel::WoeLogistic(m) => &m.feature_names,
            FittedModel::Tree(m) => &m.feature_names,
            FittedModel::RandomForest(m) => &m.feature_names,
            FittedModel::Boosted(m) => &m.feature_names,
        }
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            FittedModel::Logistic(m) => m.predict_row(row),
            FittedModel::WoeLogistic(m) => m.predict_row(row),
            FittedModel::Tree(m) => m.tree.predict_row(row),
            FittedModel::RandomForest(m) => m.predict_row(row),
            FittedModel::Boosted(m) => m.predict_row(row),
        }
    }
}

/// Versioned on-disk model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub name: String,
    pub model_kind: ModelKind,
    pub feature_names: Vec<String>,
    pub seed: u64,
    pub config: ModelSpec,
    pub model: FittedModel,
}

impl ModelArtifact {
    pub fn new(name: impl Into<String>, config: ModelSpec, model: FittedModel, seed: u64) -> Self {
        ModelArtifact {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            model_kind: model.kind(),
            feature_names: model.feature_names().to_vec(),
            seed,
            config,
            model,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let a: ModelArtifact = crate::io::read_json(path)?;
        if a.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "model schema version {} (expected {SCHEMA_VERSION})",
                a.schema_version
            )));
        }
        Ok(a)
    }
}

impl Predictor for ModelArtifact {
    fn kind(&self) -> ModelKind {
        self.model_kind
    }

    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        self.model.predict_row(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_and_softplus_are_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
    }

    #[test]
    fn kinds_round_trip_through_strings() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("nn".parse::<ModelKind>().is_err());
    }

    #[test]
    fn predict_matches_columns_by_name() {
        let m = FittedModel::Logistic(LogisticModel {
            feature_names: vec!["b".into()],
            coefficients: vec![1.0],
            intercept: 0.0,
            converged: true,
            n_iter: 1,
        });
        let x = Matrix::new(vec!["a".into(), "b".into()], vec![100.0, 0.0, -100.0, 2.0], 2).unwrap();
        let p = m.predict(&x).unwrap();
        assert_eq!(p[0], 0.5);
        assert_eq!(p[1], sigmoid(2.0));
        let missing = Matrix::new(vec!["a".into()], vec![1.0], 1).unwrap();
        assert!(matches!(m.predict(&missing), Err(Error::FeatureMismatch(_))));
    }

    #[test]
    fn params_override_and_reject_unknown() {
        let spec = ModelSpec::default_for(ModelKind::Gbm);
        let mut p = BTreeMap::new();
        p.insert("max_depth".to_string(), 0.0);
        p.insert("learning_rate".to_string(), 0.05);
        let ModelSpec::Gbm(c) = spec.with_params(&p).unwrap() else { panic!() };
        assert_eq!(c.max_depth, None);
        assert_eq!(c.learning_rate, 0.05);
        p.insert("mtry".to_string(), 3.0);
        assert!(spec.with_params(&p).is_err());
    }
}
