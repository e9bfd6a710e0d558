use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::woe::quantile_sorted;

/// How profile evaluation points are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// `n` evenly spaced quantiles of the reference column, de-duplicated.
    /// Columns with at most `n` distinct values use those values instead.
    Quantiles(usize),
    Points(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Quantiles(21)
    }
}

impl GridSpec {
    /// Ascending, de-duplicated evaluation points.
    pub fn resolve(&self, reference: &[f64]) -> Result<Vec<f64>> {
        let mut pts = match self {
            GridSpec::Quantiles(n) => {
                if *n == 0 || reference.is_empty() {
                    return Err(Error::InvalidParameter("empty grid".into()));
                }
                let mut sorted = reference.to_vec();
                sorted.sort_by(f64::total_cmp);
                let mut distinct = sorted.clone();
                distinct.dedup();
                if distinct.len() <= *n {
                    distinct
                } else if *n == 1 {
                    vec![quantile_sorted(&sorted, 0.5)]
                } else {
                    (0..*n)
                        .map(|k| quantile_sorted(&sorted, k as f64 / (*n - 1) as f64))
                        .collect()
                }
            }
            GridSpec::Points(p) => p.clone(),
        };
        if pts.is_empty() || pts.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("grid must be non-empty and finite".into()));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Ok(pts)
    }
}
