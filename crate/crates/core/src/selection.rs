//! Three-stage variable preselection (cardinality partition, boosting
//! importance, univariate K-S filter) and Gini-threshold model rejection.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::metrics::{ks_statistic, MetricReport};
use crate::models::{check_binary, train_xgb, XgbConfig};
use crate::SCHEMA_VERSION;

const PARTITION_STREAM: u64 = 0x5E1E_C700;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    /// Features with at most this many distinct values are low-cardinality.
    pub unique_threshold: usize,
    pub top_k: usize,
    pub min_ks: f64,
    pub booster: XgbConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            unique_threshold: 300,
            top_k: 81,
            min_ks: 0.1,
            booster: XgbConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cardinality {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub feature: String,
    pub n_unique: usize,
    pub partition: Cardinality,
    pub importance: f64,
    /// Only computed for features that survive preselection.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ks: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSurvivors {
    pub stage: String,
    pub count: usize,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub schema_version: u32,
    pub config: SelectionConfig,
    pub features: Vec<FeatureRecord>,
    /// `input`, `preselect`, `ks_filter`, each a subset of the one before.
    pub stages: Vec<StageSurvivors>,
}

impl SelectionReport {
    pub fn survivors(&self) -> &[String] {
        self.stages.last().map_or(&[], |s| &s.features)
    }

    pub fn stage(&self, name: &str) -> Option<&StageSurvivors> {
        self.stages.iter().find(|s| s.stage == name)
    }
}

fn distinct_count(values: &[f64]) -> usize {
    let mut v: Vec<f64> = values.iter().map(|x| if *x == 0.0 { 0.0 } else { *x }).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Splits columns into (low-cardinality, high-cardinality) by distinct count;
/// a count equal to `threshold` is low-cardinality.
pub fn split_by_unique_count(x: &Matrix, threshold: usize) -> Result<(Vec<String>, Vec<String>)> {
    if threshold == 0 {
        return Err(Error::InvalidParameter("unique threshold must be at least 1".into()));
    }
    let counts: Vec<usize> = (0..x.n_cols()).into_par_iter().map(|j| distinct_count(&x.column(j))).collect();
    let (mut low, mut high) = (Vec::new(), Vec::new());
    for (name, c) in x.names().iter().zip(counts) {
        if c <= threshold {
            low.push(name.clone());
        } else {
            high.push(name.clone());
        }
    }
    Ok((low, high))
}

/// Total XGB split gain per feature, one booster per partition.
pub fn boosting_importance(
    x: &Matrix,
    y: &[u8],
    partitions: &[Vec<String>],
    config: &XgbConfig,
    seed: u64,
) -> Result<BTreeMap<String, f64>> {
    check_binary(x, y)?;
    let per_partition = partitions
        .par_iter()
        .enumerate()
        .filter(|(_, p)| !p.is_empty())
        .map(|(k, p)| {
            let sub = x.select_columns(p)?;
            let model = train_xgb(&sub, y, config, crate::rng::derive_seed(seed, &[PARTITION_STREAM, k as u64]))?;
            Ok(p.iter().cloned().zip(model.gain_importance()).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_partition.into_iter().flatten().collect())
}

/// The `top_k` features by importance, excluding zero-importance ones. Ties
/// break by name.
pub fn preselect_by_boosting(
    x: &Matrix,
    y: &[u8],
    partitions: &[Vec<String>],
    top_k: usize,
    config: &XgbConfig,
    seed: u64,
) -> Result<Vec<String>> {
    if top_k == 0 {
        return Err(Error::InvalidParameter("top_k must be at least 1".into()));
    }
    let importance = boosting_importance(x, y, partitions, config, seed)?;
    Ok(rank_importance(&importance, top_k))
}

fn rank_importance(importance: &BTreeMap<String, f64>, top_k: usize) -> Vec<String> {
    let mut ranked: Vec<(&String, f64)> = importance
        .iter()
        .filter(|(_, &g)| g > 0.0)
        .map(|(f, &g)| (f, g))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.into_iter().take(top_k).map(|(f, _)| f.clone()).collect()
}

/// K-S of a raw feature used as a score. The statistic is the largest
/// absolute ECDF gap, so it does not depend on orientation.
pub fn feature_ks(values: &[f64], y: &[u8]) -> Result<f64> {
    ks_statistic(values, y)
}

/// Keeps features whose K-S is at least `min_ks`, in input order.
pub fn ks_filter(x: &Matrix, features: &[String], y: &[u8], min_ks: f64) -> Result<Vec<(String, f64)>> {
    if !(0.0..=1.0).contains(&min_ks) {
        return Err(Error::InvalidParameter(format!("min_ks {min_ks} outside [0, 1]")));
    }
    let scored = features
        .par_iter()
        .map(|f| {
            let j = x.col_index(f).ok_or_else(|| Error::UnknownColumn(f.clone()))?;
            Ok((f.clone(), feature_ks(&x.column(j), y)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scored.into_iter().filter(|(_, ks)| *ks >= min_ks).collect())
}

/// Runs all three stages and records what each kept.
pub fn select_features(x: &Matrix, y: &[u8], config: &SelectionConfig, seed: u64) -> Result<SelectionReport> {
    check_binary(x, y)?;
    if config.top_k == 0 {
        return Err(Error::InvalidParameter("top_k must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&config.min_ks) {
        return Err(Error::InvalidParameter(format!("min_ks {} outside [0, 1]", config.min_ks)));
    }
    let counts: Vec<usize> = (0..x.n_cols()).into_par_iter().map(|j| distinct_count(&x.column(j))).collect();
    let (low, high) = split_by_unique_count(x, config.unique_threshold)?;
    let importance = boosting_importance(x, y, &[low, high], &config.booster, seed)?;
    let mut preselected = rank_importance(&importance, config.top_k);
    // stage lists keep the input column order
    preselected.sort_by_key(|f| x.col_index(f));
    let ks_all = if preselected.is_empty() {
        Vec::new()
    } else {
        ks_filter(x, &preselected, y, 0.0)?
    };
    let ks: BTreeMap<&str, f64> = ks_all.iter().map(|(f, k)| (f.as_str(), *k)).collect();
    let kept: Vec<String> = ks_all
        .iter()
        .filter(|(_, k)| *k >= config.min_ks)
        .map(|(f, _)| f.clone())
        .collect();

    let features = x
        .names()
        .iter()
        .zip(counts)
        .map(|(f, n_unique)| FeatureRecord {
            feature: f.clone(),
            n_unique,
            partition: if n_unique <= config.unique_threshold {
                Cardinality::Low
            } else {
                Cardinality::High
            },
            importance: importance.get(f).copied().unwrap_or(0.0),
            ks: ks.get(f.as_str()).copied(),
        })
        .collect();
    let stage = |name: &str, features: Vec<String>| StageSurvivors {
        stage: name.to_string(),
        count: features.len(),
        features,
    };
    Ok(SelectionReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        features,
        stages: vec![
            stage("input", x.names().to_vec()),
            stage("preselect", preselected),
            stage("ks_filter", kept),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDecision {
    pub model_name: String,
    pub test_gini: Option<f64>,
    pub accepted: bool,
    pub reason: String,
}

/// Rejects models whose test Gini is below `min_gini` (a Gini equal to the
/// threshold is accepted) or that `expert_rejected` names.
pub fn reject_models(reports: &[MetricReport], min_gini: f64, expert_rejected: &[String]) -> Result<Vec<ModelDecision>> {
    if !(0.0..=1.0).contains(&min_gini) {
        return Err(Error::InvalidParameter(format!("min_gini {min_gini} outside [0, 1]")));
    }
    Ok(reports
        .iter()
        .map(|r| {
            let g = r.gini("test");
            let (accepted, reason) = if expert_rejected.contains(&r.model_name) {
                (false, "expert rejection".to_string())
            } else {
                match g {
                    None => (false, "test gini unavailable".to_string()),
                    Some(g) if g < min_gini => (false, format!("test gini {g:.4} below {min_gini}")),
                    Some(_) => (true, "accepted".to_string()),
                }
            };
            ModelDecision {
                model_name: r.model_name.clone(),
                test_gini: g,
                accepted,
                reason,
            }
        })
        .collect())
}
