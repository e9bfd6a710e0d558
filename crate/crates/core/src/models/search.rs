//! Random-search hyperparameter tuning.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FittedModel, ModelSpec, Predictor};
use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::metrics;
use crate::rng;

const SEARCH_STREAM: u64 = 0x5EA_0001;
const TRIAL_MODEL_STREAM: u64 = 0x5EA_0002;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamRange {
    Int { min: i64, max: i64 },
    Uniform { min: f64, max: f64 },
    LogUniform { min: f64, max: f64 },
    Fixed { value: f64 },
    Choice { values: Vec<f64> },
}

impl ParamRange {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            ParamRange::Int { min, max } => rng.random_range(min..=max) as f64,
            ParamRange::Uniform { min, max } if max > min => rng.random_range(min..max),
            ParamRange::LogUniform { min, max } if max > min => rng.random_range(min.ln()..max.ln()).exp(),
            ParamRange::Uniform { min, .. } | ParamRange::LogUniform { min, .. } => min,
            ParamRange::Fixed { value } => value,
            ParamRange::Choice { ref values } => values[rng.random_range(0..values.len())],
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match *self {
            ParamRange::Int { min, max } => v.fract() == 0.0 && v >= min as f64 && v <= max as f64,
            ParamRange::Uniform { min, max } | ParamRange::LogUniform { min, max } => v >= min && v <= max,
            ParamRange::Fixed { value } => v == value,
            ParamRange::Choice { ref values } => values.contains(&v),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            ParamRange::Int { min, max } => min <= max,
            ParamRange::Uniform { min, max } => min <= max,
            ParamRange::LogUniform { min, max } => min > 0.0 && min <= max,
            ParamRange::Fixed { .. } => true,
            ParamRange::Choice { ref values } => !values.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("empty range for '{name}'")))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperParamSpace {
    pub params: BTreeMap<String, ParamRange>,
}

impl HyperParamSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, range: ParamRange) -> Self {
        self.params.insert(name.to_string(), range);
        self
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> BTreeMap<String, f64> {
        self.params.iter().map(|(k, r)| (k.clone(), r.sample(rng))).collect()
    }

    pub fn contains(&self, point: &BTreeMap<String, f64>) -> bool {
        point
            .iter()
            .all(|(k, v)| self.params.get(k).is_some_and(|r| r.contains(*v)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub params: BTreeMap<String, f64>,
    pub valid_gini: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best_index: usize,
    pub best_spec: ModelSpec,
    pub best_model: FittedModel,
    /// Seed the winning model was trained with.
    pub best_seed: u64,
    pub trials: Vec<Trial>,
}

/// Draws `budget` configurations, trains each on `fit` and keeps the one with
/// the highest Gini on `valid`. Ties go to the earliest draw.
pub fn random_search(
    space: &HyperParamSpace,
    base: &ModelSpec,
    fit: (&Matrix, &[u8]),
    valid: (&Matrix, &[u8]),
    budget: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if budget == 0 {
        return Err(Error::InvalidParameter("search budget must be at least 1".into()));
    }
    for (k, r) in &space.params {
        r.validate(k)?;
    }
    let draws: Vec<(BTreeMap<String, f64>, u64)> = (0..budget)
        .map(|k| {
            let mut r = rng::stream(seed, &[SEARCH_STREAM, k as u64]);
            (space.sample(&mut r), rng::derive_seed(seed, &[TRIAL_MODEL_STREAM, k as u64]))
        })
        .collect();

    let results: Vec<Result<(FittedModel, f64)>> = draws
        .par_iter()
        .map(|(params, model_seed)| {
            let spec = base.with_params(params)?;
            let model = spec.fit(fit.0, fit.1, *model_seed)?;
            let scores = model.predict(valid.0)?;
            let g = metrics::gini(&scores, valid.1)?;
            Ok((model, g))
        })
        .collect();

    let mut trials = Vec::with_capacity(budget);
    let mut best: Option<(usize, FittedModel, f64)> = None;
    let mut first_error = None;
    for (index, ((params, _), res)) in draws.iter().zip(results).enumerate() {
        match res {
            Ok((model, g)) => {
                trials.push(Trial {
                    index,
                    params: params.clone(),
                    valid_gini: Some(g),
                    error: None,
                });
                if best.as_ref().is_none_or(|b| g > b.2) {
                    best = Some((index, model, g));
                }
            }
            Err(e) => {
                trials.push(Trial {
                    index,
                    params: params.clone(),
                    valid_gini: None,
                    error: Some(e.to_string()),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    let Some((best_index, best_model, _)) = best else {
        return Err(first_error.expect("every trial failed"));
    };
    Ok(SearchOutcome {
        best_index,
        best_spec: base.with_params(&draws[best_index].0)?,
        best_model,
        best_seed: draws[best_index].1,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelKind, TreeConfig};

    fn noisy_step(n: usize) -> (Matrix, Vec<u8>) {
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<u8> = (0..n).map(|i| ((i * 2 > n) ^ (i % 9 == 0)) as u8).collect();
        (Matrix::new(vec!["x".into()], xs, n).unwrap(), y)
    }

    #[test]
    fn samples_stay_in_range() {
        let space = HyperParamSpace::new()
            .with("a", ParamRange::Int { min: 2, max: 5 })
            .with("b", ParamRange::LogUniform { min: 0.01, max: 0.3 })
            .with("c", ParamRange::Uniform { min: 0.5, max: 1.0 });
        let mut r = rng::stream(1, &[]);
        for _ in 0..500 {
            assert!(space.contains(&space.sample(&mut r)));
        }
    }

    #[test]
    fn budget_one_returns_the_single_draw() {
        let (x, y) = noisy_step(60);
        let space = HyperParamSpace::new().with("max_depth", ParamRange::Int { min: 1, max: 4 });
        let base = ModelSpec::default_for(ModelKind::Tree);
        let out = random_search(&space, &base, (&x, &y), (&x, &y), 1, 3).unwrap();
        assert_eq!(out.trials.len(), 1);
        assert_eq!(out.best_index, 0);
        assert_eq!(out.best_spec, base.with_params(&out.trials[0].params).unwrap());
    }

    #[test]
    fn singleton_space_ignores_budget() {
        let (x, y) = noisy_step(60);
        let space = HyperParamSpace::new()
            .with("max_depth", ParamRange::Fixed { value: 2.0 })
            .with("min_leaf", ParamRange::Int { min: 5, max: 5 });
        let base = ModelSpec::default_for(ModelKind::Tree);
        let out = random_search(&space, &base, (&x, &y), (&x, &y), 6, 3).unwrap();
        assert_eq!(out.best_spec, ModelSpec::Tree(TreeConfig { max_depth: Some(2), min_leaf: 5 }));
        // identical configs tie, so the first draw wins
        assert_eq!(out.best_index, 0);
    }

    #[test]
    fn dominant_config_is_selected() {
        // min_leaf = 80 on 80 rows forces a constant model; min_leaf = 1 learns the step
        let (x, y) = noisy_step(80);
        let space = HyperParamSpace::new().with("min_leaf", ParamRange::Choice { values: vec![80.0, 1.0] });
        let base = ModelSpec::Tree(TreeConfig { max_depth: Some(3), min_leaf: 1 });
        let out = random_search(&space, &base, (&x, &y), (&x, &y), 8, 11).unwrap();
        let drawn: Vec<f64> = out.trials.iter().map(|t| t.params["min_leaf"]).collect();
        assert!(drawn.contains(&80.0) && drawn.contains(&1.0));
        assert_eq!(out.best_spec, ModelSpec::Tree(TreeConfig { max_depth: Some(3), min_leaf: 1 }));
        let first_good = drawn.iter().position(|&v| v == 1.0).unwrap();
        assert_eq!(out.best_index, first_good);
        for t in &out.trials {
            if t.params["min_leaf"] == 80.0 {
                assert_eq!(t.valid_gini, Some(0.0));
            }
        }
    }
}
