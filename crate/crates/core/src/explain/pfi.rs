use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::metrics::auc;
use crate::models::{ModelKind, Predictor};
use crate::rng;
use crate::SCHEMA_VERSION;

const PFI_STREAM: u64 = 0x0BF1_0001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfiFeature {
    pub feature: String,
    pub baseline_metric: f64,
    /// Baseline AUC minus the mean permuted AUC; may be negative.
    pub mean_drop: f64,
    pub drops: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfiResult {
    pub schema_version: u32,
    pub model_kind: ModelKind,
    pub metric: String,
    pub baseline_metric: f64,
    pub n_repeats: usize,
    pub seed: u64,
    pub features: Vec<PfiFeature>,
}

impl PfiResult {
    pub fn get(&self, feature: &str) -> Option<&PfiFeature> {
        self.features.iter().find(|f| f.feature == feature)
    }

    /// Features ordered by decreasing mean drop.
    pub fn ranked(&self) -> Vec<&PfiFeature> {
        let mut v: Vec<&PfiFeature> = self.features.iter().collect();
        v.sort_by(|a, b| b.mean_drop.total_cmp(&a.mean_drop).then(a.feature.cmp(&b.feature)));
        v
    }
}

/// AUC drop when each model feature is shuffled, `n_repeats` times per
/// feature with an independent seeded stream per (feature, repeat).
pub fn permutation_importance(
    model: &dyn Predictor,
    x: &Matrix,
    y: &[u8],
    n_repeats: usize,
    seed: u64,
) -> Result<PfiResult> {
    if n_repeats == 0 {
        return Err(Error::InvalidParameter("n_repeats must be at least 1".into()));
    }
    let baseline = auc(&model.predict(x)?, y)?;
    let features = model.feature_names().to_vec();
    let cols = features
        .iter()
        .map(|f| x.col_index(f).ok_or_else(|| Error::FeatureMismatch(f.clone())))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..features.len())
        .flat_map(|j| (0..n_repeats).map(move |r| (j, r)))
        .collect();
    let permuted: Vec<f64> = jobs
        .par_iter()
        .map(|&(j, r)| {
            let mut rng = rng::stream(seed, &[PFI_STREAM, j as u64, r as u64]);
            let mut column = x.column(cols[j]);
            column.shuffle(&mut rng);
            let mut shuffled = x.clone();
            shuffled.set_column(cols[j], &column);
            auc(&model.predict(&shuffled)?, y)
        })
        .collect::<Result<_>>()?;

    let features = features
        .into_iter()
        .enumerate()
        .map(|(j, feature)| {
            let drops: Vec<f64> = permuted[j * n_repeats..(j + 1) * n_repeats]
                .iter()
                .map(|p| baseline - p)
                .collect();
            let mean_drop = drops.iter().sum::<f64>() / n_repeats as f64;
            PfiFeature {
                feature,
                baseline_metric: baseline,
                mean_drop,
                drops,
            }
        })
        .collect();
    Ok(PfiResult {
        schema_version: SCHEMA_VERSION,
        model_kind: model.kind(),
        metric: "auc".into(),
        baseline_metric: baseline,
        n_repeats,
        seed,
        features,
    })
}
