use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::{ColumnValues, Dataset, Feature};
use crate::error::{Error, Result};

/// k-1 indicator mapping for one categorical column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMap {
    pub column: String,
    /// Most frequent level; encoded as all zeros.
    pub reference: String,
    /// Non-reference levels in indicator-column order.
    pub levels: Vec<String>,
}

impl LevelMap {
    pub fn indicator_name(&self, level: &str) -> String {
        format!("{}={}", self.column, level)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DummyEncoder {
    pub maps: Vec<LevelMap>,
}

impl DummyEncoder {
    pub fn fit(d: &Dataset, cols: &[String]) -> Result<DummyEncoder> {
        let mut maps = Vec::with_capacity(cols.len());
        for name in cols {
            let col = d.column(name).ok_or_else(|| Error::UnknownColumn(name.clone()))?;
            let ColumnValues::Categorical(values) = &col.values else {
                return Err(Error::NotCategorical(name.clone()));
            };
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for v in values.iter().flatten() {
                *counts.entry(v.as_str()).or_default() += 1;
            }
            // ties on frequency resolve to the lexicographically first level
            let reference = counts
                .iter()
                .fold(None::<(&str, usize)>, |best, (&l, &c)| match best {
                    Some((_, bc)) if bc >= c => best,
                    _ => Some((l, c)),
                })
                .map(|(l, _)| l.to_string())
                .unwrap_or_default();
            let levels = counts
                .keys()
                .filter(|l| **l != reference)
                .map(|l| l.to_string())
                .collect();
            maps.push(LevelMap {
                column: name.clone(),
                reference,
                levels,
            });
        }
        Ok(DummyEncoder { maps })
    }

    /// Replaces each mapped column, in place, by its indicator columns.
    /// Levels unseen at fit time encode as all zeros.
    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        let mut out = Vec::with_capacity(d.columns().len());
        for c in d.columns() {
            match self.maps.iter().find(|m| m.column == c.name) {
                None => out.push(c.clone()),
                Some(map) => {
                    let ColumnValues::Categorical(values) = &c.values else {
                        return Err(Error::NotCategorical(c.name.clone()));
                    };
                    for level in &map.levels {
                        out.push(Feature::numeric(
                            map.indicator_name(level),
                            values
                                .iter()
                                .map(|v| Some(if v.as_deref() == Some(level.as_str()) { 1.0 } else { 0.0 }))
                                .collect(),
                        ));
                    }
                }
            }
        }
        for m in &self.maps {
            if d.column(&m.column).is_none() {
                return Err(Error::UnknownColumn(m.column.clone()));
            }
        }
        d.with_columns(out)
    }
}

pub fn dummy_encode(d: &Dataset, cols: &[String]) -> Result<(Dataset, DummyEncoder)> {
    let enc = DummyEncoder::fit(d, cols)?;
    let out = enc.transform(d)?;
    Ok((out, enc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(values: &[&str]) -> Dataset {
        Dataset::new(
            vec![Feature::categorical(
                "c",
                values.iter().map(|v| Some(v.to_string())).collect(),
            )],
            vec![0; values.len()],
            None,
        )
        .unwrap()
    }

    #[test]
    fn k_minus_one_columns_with_modal_reference() {
        let d = cat(&["A", "B", "A", "C", "A"]);
        let (out, enc) = dummy_encode(&d, &["c".into()]).unwrap();
        assert_eq!(enc.maps[0].reference, "A");
        assert_eq!(out.column_names(), vec!["c=B", "c=C"]);
        assert_eq!(
            out.column("c=B").unwrap().as_numeric().unwrap(),
            &[Some(0.0), Some(1.0), Some(0.0), Some(0.0), Some(0.0)]
        );
    }

    #[test]
    fn single_level_yields_no_columns() {
        let (out, _) = dummy_encode(&cat(&["A", "A"]), &["c".into()]).unwrap();
        assert!(out.columns().is_empty());
    }

    #[test]
    fn unseen_level_is_all_zero() {
        let enc = DummyEncoder::fit(&cat(&["A", "B", "A", "C"]), &["c".into()]).unwrap();
        let out = enc.transform(&cat(&["D"])).unwrap();
        for col in out.columns() {
            assert_eq!(col.as_numeric().unwrap(), &[Some(0.0)]);
        }
    }

    #[test]
    fn unknown_and_numeric_columns_rejected() {
        let d = cat(&["A"]);
        assert!(matches!(DummyEncoder::fit(&d, &["zz".into()]), Err(Error::UnknownColumn(_))));
        let n = Dataset::new(vec![Feature::numeric("x", vec![Some(1.0)])], vec![0], None).unwrap();
        assert!(matches!(DummyEncoder::fit(&n, &["x".into()]), Err(Error::NotCategorical(_))));
    }

    #[test]
    fn stored_encoding_reproduces_fit_matrix() {
        let d = cat(&["x", "y", "z", "y", "y"]);
        let (fit_out, enc) = dummy_encode(&d, &["c".into()]).unwrap();
        assert_eq!(enc.transform(&d).unwrap(), fit_out);
    }
}
