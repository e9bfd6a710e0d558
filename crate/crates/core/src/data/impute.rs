use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::{ColumnValues, Dataset, Feature};
use crate::error::Result;

pub const MISSING_LEVEL: &str = "MISSING";

/// Column means fitted on training data and reused on every held-out part.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    pub means: BTreeMap<String, f64>,
    /// Numeric columns with no observed values at fit time; removed on transform.
    pub dropped: Vec<String>,
}

impl Imputer {
    pub fn fit(d: &Dataset) -> Imputer {
        let mut imp = Imputer::default();
        for c in d.columns() {
            if let ColumnValues::Numeric(v) = &c.values {
                let (sum, n) = v
                    .iter()
                    .flatten()
                    .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
                if n == 0 {
                    log::warn!("column '{}' has no observed values; dropping it", c.name);
                    imp.dropped.push(c.name.clone());
                } else {
                    imp.means.insert(c.name.clone(), sum / n as f64);
                }
            }
        }
        imp
    }

    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        let cols = d
            .columns()
            .iter()
            .filter(|c| !self.dropped.contains(&c.name))
            .map(|c| match &c.values {
                ColumnValues::Numeric(v) => {
                    let fill = self.means.get(&c.name).copied();
                    Feature::numeric(
                        c.name.clone(),
                        v.iter().map(|x| x.or(fill)).collect(),
                    )
                }
                ColumnValues::Categorical(v) => Feature::categorical(
                    c.name.clone(),
                    v.iter()
                        .map(|x| Some(x.clone().unwrap_or_else(|| MISSING_LEVEL.to_string())))
                        .collect(),
                ),
            })
            .collect();
        d.with_columns(cols)
    }
}

/// Fits mean imputation on `d` and applies it.
pub fn impute_mean(d: &Dataset) -> Result<(Dataset, Imputer)> {
    let imp = Imputer::fit(d);
    let out = imp.transform(d)?;
    Ok((out, imp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(cols: Vec<Feature>) -> Dataset {
        let n = cols[0].values.len();
        Dataset::new(cols, vec![0; n], None).unwrap()
    }

    #[test]
    fn fills_with_mean() {
        let d = ds(vec![Feature::numeric("x", vec![Some(1.0), None, Some(3.0)])]);
        let (out, imp) = impute_mean(&d).unwrap();
        assert_eq!(out.column("x").unwrap().as_numeric().unwrap(), &[Some(1.0), Some(2.0), Some(3.0)]);
        assert_eq!(imp.means["x"], 2.0);
    }

    #[test]
    fn complete_column_unchanged() {
        let d = ds(vec![Feature::numeric("x", vec![Some(1.0), Some(5.0)])]);
        let (out, _) = impute_mean(&d).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn all_missing_column_dropped() {
        let d = ds(vec![
            Feature::numeric("x", vec![None, None]),
            Feature::numeric("y", vec![Some(1.0), None]),
        ]);
        let (out, imp) = impute_mean(&d).unwrap();
        assert!(out.column("x").is_none());
        assert_eq!(imp.dropped, vec!["x"]);
        // held-out data loses the same column
        assert!(imp.transform(&d).unwrap().column("x").is_none());
    }

    #[test]
    fn categorical_missing_gets_level() {
        let d = ds(vec![Feature::categorical("c", vec![Some("a".into()), None])]);
        let (out, _) = impute_mean(&d).unwrap();
        assert_eq!(out.column("c").unwrap().levels().unwrap(), vec!["MISSING", "a"]);
    }

    #[test]
    fn idempotent() {
        let d = ds(vec![
            Feature::numeric("x", vec![Some(1.0), None, Some(4.0), None]),
            Feature::categorical("c", vec![None, Some("q".into()), None, None]),
        ]);
        let (once, _) = impute_mean(&d).unwrap();
        let (twice, _) = impute_mean(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn held_out_uses_train_means() {
        let train = ds(vec![Feature::numeric("x", vec![Some(10.0), Some(20.0)])]);
        let test = ds(vec![Feature::numeric("x", vec![None, Some(0.0)])]);
        let imp = Imputer::fit(&train);
        let out = imp.transform(&test).unwrap();
        assert_eq!(out.column("x").unwrap().as_numeric().unwrap()[0], Some(15.0));
    }
}
