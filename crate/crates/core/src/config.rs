//! Run configuration, read from TOML. Every field has a default, so an empty
//! file is a valid configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{Schema, SplitParams};
use crate::error::{Error, Result};
use crate::models::{HyperParamSpace, ModelKind, ParamRange};
use crate::selection::SelectionConfig;
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; split, search, model and explainer streams derive from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub split: SplitParams,
    pub selection: SelectionConfig,
    pub models: ModelsConfig,
    pub evaluation: EvaluationConfig,
    pub explain: ExplainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            output_dir: PathBuf::from("runs/default"),
            data: DataConfig::default(),
            synth: SynthConfig::default(),
            split: SplitParams::default(),
            selection: SelectionConfig::default(),
            models: ModelsConfig::default(),
            evaluation: EvaluationConfig::default(),
            explain: ExplainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Input CSV. `split` requires it unless given on the command line.
    pub path: Option<PathBuf>,
    /// Cell text read as missing (in addition to an empty cell).
    pub missing_token: String,
    pub schema: Schema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    /// Families trained by `train --family all`.
    pub families: Vec<ModelKind>,
    /// Random-search trials per family; 1 trains the base configuration only.
    pub budget: usize,
    /// Share of train held out to score search trials.
    pub validation_fraction: f64,
    /// Search space per family, keyed by family name.
    pub spaces: BTreeMap<ModelKind, HyperParamSpace>,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        use ParamRange::*;
        let spaces = [
            (
                ModelKind::Logistic,
                HyperParamSpace::new().with("ridge", LogUniform { min: 1e-8, max: 1e-2 }),
            ),
            (
                ModelKind::WoeLogistic,
                HyperParamSpace::new()
                    .with("max_bins", Int { min: 4, max: 12 })
                    .with("min_bin_frac", Uniform { min: 0.02, max: 0.1 }),
            ),
            (
                ModelKind::Tree,
                HyperParamSpace::new()
                    .with("max_depth", Int { min: 3, max: 10 })
                    .with("min_leaf", Int { min: 10, max: 200 }),
            ),
            (
                // fully grown trees: depth 0 means unlimited
                ModelKind::RandomForest,
                HyperParamSpace::new()
                    .with("max_depth", Fixed { value: 0.0 })
                    .with("min_leaf", Fixed { value: 1.0 })
                    .with("mtry", Int { min: 2, max: 8 }),
            ),
            (
                ModelKind::Gbm,
                HyperParamSpace::new()
                    .with("n_trees", Int { min: 50, max: 200 })
                    .with("learning_rate", LogUniform { min: 0.03, max: 0.2 })
                    .with("max_depth", Int { min: 2, max: 4 })
                    .with("min_leaf", Int { min: 10, max: 50 }),
            ),
            (
                ModelKind::Xgb,
                HyperParamSpace::new()
                    .with("n_trees", Int { min: 50, max: 200 })
                    .with("learning_rate", LogUniform { min: 0.03, max: 0.2 })
                    .with("max_depth", Int { min: 2, max: 4 })
                    .with("lambda", LogUniform { min: 0.1, max: 10.0 })
                    .with("gamma", Uniform { min: 0.0, max: 1.0 })
                    .with("subsample", Uniform { min: 0.7, max: 1.0 })
                    .with("colsample", Uniform { min: 0.6, max: 1.0 }),
            ),
        ];
        ModelsConfig {
            families: ModelKind::COMPARED.to_vec(),
            budget: 8,
            validation_fraction: 0.25,
            spaces: spaces.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Models with a test Gini below this are rejected.
    pub min_gini: f64,
    /// Models rejected on expert judgement regardless of their metrics.
    pub expert_rejected: Vec<String>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            min_gini: 0.6,
            expert_rejected: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    pub n_repeats: usize,
    pub grid_points: usize,
    /// Rows sampled from train as the background for PDP and break-down.
    pub background_rows: usize,
    /// Features profiled by PDP/CP; empty means every model feature.
    pub features: Vec<String>,
    /// Row numbers in the test split explained by CP and break-down.
    pub instances: Vec<usize>,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            n_repeats: 10,
            grid_points: 21,
            background_rows: 1000,
            features: Vec::new(),
            instances: vec![0],
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().replace('\n', " ")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} outside [0, 1]")))
            }
        };
        unit("split.test_fraction", self.split.test_fraction)?;
        unit("split.oos_fraction", self.split.oos_fraction)?;
        unit("selection.min_ks", self.selection.min_ks)?;
        unit("evaluation.min_gini", self.evaluation.min_gini)?;
        if !(self.models.validation_fraction > 0.0 && self.models.validation_fraction < 1.0) {
            return Err(Error::Config("models.validation_fraction must lie in (0, 1)".into()));
        }
        if self.split.oot_start >= self.split.oot_end {
            return Err(Error::Config("split.oot_start must precede split.oot_end".into()));
        }
        if self.selection.unique_threshold == 0 || self.selection.top_k == 0 {
            return Err(Error::Config("selection.unique_threshold and top_k must be at least 1".into()));
        }
        if self.models.budget == 0 {
            return Err(Error::Config("models.budget must be at least 1".into()));
        }
        if self.explain.n_repeats == 0 || self.explain.grid_points == 0 || self.explain.background_rows == 0 {
            return Err(Error::Config("explain counts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn space(&self, kind: ModelKind) -> HyperParamSpace {
        self.models.spaces.get(&kind).cloned().unwrap_or_default()
    }
}

/// Commented TOML with every default spelled out, for `--print-config` style
/// bootstrapping.
pub fn default_config_toml() -> String {
    let body = RunConfig::default().to_toml_string().expect("defaults serialize");
    format!(
        "# Scorecard run configuration. Every key is optional.\n\
         # Defaults: 30% test, 20% out-of-sample, out-of-time window (2018-08-31, 2018-11-30],\n\
         # cardinality threshold 300, top 81 features by boosting gain, K-S floor 0.1,\n\
         # models with test Gini below 0.6 rejected.\n\n{body}"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.selection.unique_threshold, 300);
        assert_eq!(cfg.selection.top_k, 81);
        assert_eq!(cfg.selection.min_ks, 0.1);
        assert_eq!(cfg.evaluation.min_gini, 0.6);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::default();
        let text = default_config_toml();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_override() {
        let cfg = RunConfig::from_toml_str("seed = 7\n[selection]\nmin_ks = 0.2\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.selection.min_ks, 0.2);
        assert_eq!(cfg.selection.top_k, 81);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(RunConfig::from_toml_str("[selection]\nmin_ks = 2.0\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml_str("bogus = 1\n"), Err(Error::Config(_))));
    }
}
