//! Discrimination metrics and per-split evaluation reports.
//!
//! Scores are oriented so that a higher score means a higher probability of
//! the bad class (target = 1). Reversing the orientation flips the sign of
//! Gini.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::models::Predictor;
use crate::SCHEMA_VERSION;

fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_bad = labels.iter().filter(|&&l| l == 1).count();
    let n_good = labels.len() - n_bad;
    if n_bad == 0 || n_good == 0 {
        return Err(Error::OneClassOnly);
    }
    Ok((n_bad, n_good))
}

fn sorted_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order
}

/// Mann-Whitney AUC: the share of (bad, good) pairs where the bad row scores
/// higher, ties counting one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (n_bad, n_good) = check_inputs(scores, labels)?;
    let order = sorted_order(scores);
    // twice the rank sum of the bads keeps midranks integral
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let twice_midrank = (i + 1 + j + 1) as u128;
        let bads = order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u128;
        twice_rank_sum += bads * twice_midrank;
        i = j + 1;
    }
    let nb = n_bad as u128;
    let twice_u = twice_rank_sum - nb * (nb + 1);
    Ok(twice_u as f64 / 2.0 / (n_bad as f64 * n_good as f64))
}

pub fn gini(scores: &[f64], labels: &[u8]) -> Result<f64> {
    Ok(gini_from_auc(auc(scores, labels)?))
}

pub fn gini_from_auc(auc: f64) -> f64 {
    2.0 * auc - 1.0
}

/// Largest gap between the empirical score CDFs of goods and bads.
pub fn ks_statistic(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (n_bad, n_good) = check_inputs(scores, labels)?;
    let order = sorted_order(scores);
    let (mut bads, mut goods) = (0usize, 0usize);
    let mut best = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                bads += 1;
            } else {
                goods += 1;
            }
            i += 1;
        }
        let gap = (goods as f64 / n_good as f64 - bads as f64 / n_bad as f64).abs();
        best = best.max(gap);
    }
    Ok(best)
}

/// Source of elapsed time for learn/predict timings.
pub trait Clock {
    fn now(&self) -> Duration;
}

pub struct WallClock(Instant);

impl WallClock {
    pub fn new() -> Self {
        WallClock(Instant::now())
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> Duration {
        self.0.elapsed()
    }
}

/// Clock that never advances; timings come out as zero.
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now(&self) -> Duration {
        Duration::ZERO
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub split: String,
    pub n_rows: usize,
    pub gini: Option<f64>,
    pub auc: Option<f64>,
    pub ks: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// One row of the model comparison table.
///
/// Timings are wall-clock measurements and are kept out of the serialized
/// report so that reports stay reproducible; they travel in a sidecar file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub model_name: String,
    pub splits: Vec<SplitMetrics>,
    #[serde(skip)]
    pub learn_time_s: Option<f64>,
    #[serde(skip)]
    pub predict_time_s: Option<f64>,
}

impl MetricReport {
    pub fn split(&self, name: &str) -> Option<&SplitMetrics> {
        self.splits.iter().find(|s| s.split == name)
    }

    pub fn gini(&self, name: &str) -> Option<f64> {
        self.split(name).and_then(|s| s.gini)
    }

    /// Checks the invariants every report must satisfy.
    pub fn validate(&self) -> Result<()> {
        for s in &self.splits {
            if let (Some(g), Some(a)) = (s.gini, s.auc) {
                if g != gini_from_auc(a) || !(0.0..=1.0).contains(&a) {
                    return Err(Error::OutOfRange(format!("split {}: gini {g}, auc {a}", s.split)));
                }
            }
            if let Some(k) = s.ks {
                if !(0.0..=1.0).contains(&k) {
                    return Err(Error::OutOfRange(format!("split {}: ks {k}", s.split)));
                }
            }
        }
        Ok(())
    }
}

/// A named, labelled evaluation set.
#[derive(Debug, Clone, Copy)]
pub struct EvalSet<'a> {
    pub name: &'a str,
    pub x: &'a Matrix,
    pub y: &'a [u8],
}

pub fn split_metrics(name: &str, scores: &[f64], labels: &[u8]) -> SplitMetrics {
    let computed = auc(scores, labels).and_then(|a| Ok((a, ks_statistic(scores, labels)?)));
    match computed {
        Ok((a, k)) => SplitMetrics {
            split: name.to_string(),
            n_rows: labels.len(),
            gini: Some(gini_from_auc(a)),
            auc: Some(a),
            ks: Some(k),
            error: None,
        },
        Err(e) => SplitMetrics {
            split: name.to_string(),
            n_rows: labels.len(),
            gini: None,
            auc: None,
            ks: None,
            error: Some(e.to_string()),
        },
    }
}

/// Scores every set; a failing split is recorded in its row and the others
/// are still reported.
pub fn evaluate(
    model_name: &str,
    model: &dyn Predictor,
    sets: &[EvalSet<'_>],
    learn_time: Option<Duration>,
    clock: &dyn Clock,
) -> Result<MetricReport> {
    let mut splits = Vec::with_capacity(sets.len());
    let mut predict_time = Duration::ZERO;
    for set in sets {
        let start = clock.now();
        let scores = model.predict(set.x)?;
        predict_time += clock.now().saturating_sub(start);
        splits.push(split_metrics(set.name, &scores, set.y));
    }
    let report = MetricReport {
        schema_version: SCHEMA_VERSION,
        model_name: model_name.to_string(),
        splits,
        learn_time_s: learn_time.map(|d| d.as_secs_f64()),
        predict_time_s: Some(predict_time.as_secs_f64()),
    };
    report.validate()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut pairs = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            if labels[i] != 1 {
                continue;
            }
            for (j, &sj) in scores.iter().enumerate() {
                if labels[j] != 0 {
                    continue;
                }
                pairs += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
        num / pairs
    }

    #[test]
    fn auc_worked_example() {
        let s = [0.1, 0.4, 0.35, 0.8];
        let y = [0, 0, 1, 1];
        assert_eq!(auc(&s, &y).unwrap(), 0.75);
        assert_eq!(brute_auc(&s, &y), 0.75);
        assert_eq!(gini(&s, &y).unwrap(), 0.5);
    }

    #[test]
    fn auc_extremes() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 5], &[0, 1, 0, 1, 1]).unwrap(), 0.5);
        assert_eq!(gini(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::OneClassOnly)));
    }

    #[test]
    fn ks_worked_example() {
        // goods {0.2, 0.6}, bads {0.4, 0.8}
        let s = [0.2, 0.6, 0.4, 0.8];
        let y = [0, 0, 1, 1];
        assert_eq!(ks_statistic(&s, &y).unwrap(), 0.5);
        assert_eq!(ks_statistic(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[0.1, 0.2, 0.1, 0.2], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert!(matches!(ks_statistic(&[0.5], &[0]), Err(Error::OneClassOnly)));
    }

    #[test]
    fn failed_split_keeps_others() {
        let m = split_metrics("out_of_time", &[0.1, 0.2], &[0, 0]);
        assert!(m.gini.is_none());
        assert!(m.error.as_deref().unwrap().contains("OneClassOnly"));
    }

    proptest! {
        #[test]
        fn auc_invariant_under_increasing_maps(
            raw in proptest::collection::vec((0u8..20, any::<bool>()), 4..120)
        ) {
            let scores: Vec<f64> = raw.iter().map(|(s, _)| *s as f64 / 7.0).collect();
            let mut labels: Vec<u8> = raw.iter().map(|(_, b)| *b as u8).collect();
            labels[0] = 0;
            labels[1] = 1;
            let base = auc(&scores, &labels).unwrap();
            prop_assert_eq!(base, brute_auc(&scores, &labels));
            let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
            let affine: Vec<f64> = scores.iter().map(|s| 3.0 * s - 2.0).collect();
            prop_assert_eq!(auc(&exp, &labels).unwrap(), base);
            prop_assert_eq!(auc(&affine, &labels).unwrap(), base);
        }
    }
}
