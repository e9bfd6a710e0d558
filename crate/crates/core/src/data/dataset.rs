use std::collections::{BTreeSet, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

/// Per-row values of one column. `None` is the missing marker.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnValues {
    pub fn len(&self) -> usize {
        match self {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> ColumnValues {
        match self {
            ColumnValues::Numeric(v) => ColumnValues::Numeric(rows.iter().map(|&i| v[i]).collect()),
            ColumnValues::Categorical(v) => {
                ColumnValues::Categorical(rows.iter().map(|&i| v[i].clone()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    pub values: ColumnValues,
}

impl Feature {
    pub fn numeric(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Feature {
            name: name.into(),
            values: ColumnValues::Numeric(values),
        }
    }

    pub fn categorical(name: impl Into<String>, values: Vec<Option<String>>) -> Self {
        Feature {
            name: name.into(),
            values: ColumnValues::Categorical(values),
        }
    }

    pub fn kind(&self) -> FeatureKind {
        match self.values {
            ColumnValues::Numeric(_) => FeatureKind::Numeric,
            ColumnValues::Categorical(_) => FeatureKind::Categorical,
        }
    }

    pub fn n_missing(&self) -> usize {
        match &self.values {
            ColumnValues::Numeric(v) => v.iter().filter(|x| x.is_none()).count(),
            ColumnValues::Categorical(v) => v.iter().filter(|x| x.is_none()).count(),
        }
    }

    /// Number of distinct non-missing values.
    pub fn n_unique(&self) -> usize {
        match &self.values {
            ColumnValues::Numeric(v) => v
                .iter()
                .flatten()
                .map(|x| if *x == 0.0 { 0u64 } else { x.to_bits() })
                .collect::<HashSet<_>>()
                .len(),
            ColumnValues::Categorical(v) => v.iter().flatten().collect::<HashSet<_>>().len(),
        }
    }

    /// Sorted distinct levels of a categorical column.
    pub fn levels(&self) -> Option<Vec<String>> {
        match &self.values {
            ColumnValues::Numeric(_) => None,
            ColumnValues::Categorical(v) => Some(
                v.iter()
                    .flatten()
                    .cloned()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect(),
            ),
        }
    }

    pub fn as_numeric(&self) -> Option<&[Option<f64>]> {
        match &self.values {
            ColumnValues::Numeric(v) => Some(v),
            ColumnValues::Categorical(_) => None,
        }
    }
}

/// Feature columns, a binary target (1 = bad) and optional observation dates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Feature>,
    target: Vec<u8>,
    dates: Option<Vec<NaiveDate>>,
}

impl Dataset {
    pub fn new(columns: Vec<Feature>, target: Vec<u8>, dates: Option<Vec<NaiveDate>>) -> Result<Self> {
        let n = target.len();
        let mut seen = HashSet::new();
        for c in &columns {
            if c.values.len() != n {
                return Err(Error::LengthMismatch(format!(
                    "column '{}' has {} values, target has {n}",
                    c.name,
                    c.values.len()
                )));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
        }
        if let Some((row, &v)) = target.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::BadTarget {
                row,
                value: v.to_string(),
            });
        }
        if let Some(d) = &dates {
            if d.len() != n {
                return Err(Error::LengthMismatch(format!(
                    "{} dates for {n} rows",
                    d.len()
                )));
            }
        }
        Ok(Dataset {
            columns,
            target,
            dates,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn columns(&self) -> &[Feature] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Feature> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    pub fn dates(&self) -> Option<&[NaiveDate]> {
        self.dates.as_deref()
    }

    pub fn has_both_classes(&self) -> bool {
        let bad = self.target.iter().filter(|&&t| t == 1).count();
        bad > 0 && bad < self.target.len()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| Feature {
                    name: c.name.clone(),
                    values: c.values.select(rows),
                })
                .collect(),
            target: rows.iter().map(|&i| self.target[i]).collect(),
            dates: self
                .dates
                .as_ref()
                .map(|d| rows.iter().map(|&i| d[i]).collect()),
        }
    }

    /// Replaces the feature columns, keeping target and dates.
    pub fn with_columns(&self, columns: Vec<Feature>) -> Result<Dataset> {
        Dataset::new(columns, self.target.clone(), self.dates.clone())
    }

    pub fn retain_columns(&self, names: &[String]) -> Result<Dataset> {
        let cols = names
            .iter()
            .map(|n| {
                self.column(n)
                    .cloned()
                    .ok_or_else(|| Error::UnknownColumn(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        self.with_columns(cols)
    }
}
