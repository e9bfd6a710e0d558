use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::models::{ModelKind, Predictor};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BdOrdering {
    /// At each step fix the feature whose inclusion moves the mean prediction
    /// the most; ties go to the smaller feature name.
    #[default]
    Greedy,
    Fixed(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub feature: String,
    pub value: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakDownResult {
    pub schema_version: u32,
    pub model_kind: ModelKind,
    /// Mean prediction over the background.
    pub intercept: f64,
    pub contributions: Vec<Contribution>,
    pub final_prediction: f64,
}

impl BreakDownResult {
    pub fn total(&self) -> f64 {
        self.intercept + self.contributions.iter().map(|c| c.delta).sum::<f64>()
    }
}

struct Valuer<'a> {
    model: &'a dyn Predictor,
    background: &'a Matrix,
    instance: &'a [f64],
    /// Background column of each model feature.
    cols: Vec<usize>,
    exact: f64,
}

impl Valuer<'_> {
    /// Mean prediction with the features in `fixed` set to the instance's values.
    fn value(&self, fixed: &[usize]) -> Result<f64> {
        if fixed.len() == self.cols.len() {
            return Ok(self.exact);
        }
        let mut m = self.background.clone();
        for &f in fixed {
            let j = self.cols[f];
            m.fill_column(j, self.instance[j]);
        }
        let p = self.model.predict(&m)?;
        Ok(p.iter().sum::<f64>() / p.len() as f64)
    }
}

/// Sequential additive attribution of one prediction. `instance` is laid out
/// in `background` column order.
pub fn break_down(
    model: &dyn Predictor,
    background: &Matrix,
    instance: &[f64],
    ordering: &BdOrdering,
) -> Result<BreakDownResult> {
    if background.n_rows() == 0 {
        return Err(Error::InvalidParameter("empty background".into()));
    }
    if instance.len() != background.n_cols() {
        return Err(Error::LengthMismatch(format!(
            "instance has {} values for {} columns",
            instance.len(),
            background.n_cols()
        )));
    }
    let features = model.feature_names().to_vec();
    let cols = features
        .iter()
        .map(|f| background.col_index(f).ok_or_else(|| Error::FeatureMismatch(f.clone())))
        .collect::<Result<Vec<_>>>()?;
    let exact = model.predict(&Matrix::repeat_row(background.names(), instance, 1))?[0];
    let valuer = Valuer {
        model,
        background,
        instance,
        cols,
        exact,
    };

    let intercept = valuer.value(&[])?;
    let mut fixed: Vec<usize> = Vec::with_capacity(features.len());
    let mut current = intercept;
    let mut contributions = Vec::with_capacity(features.len());

    let order: Option<Vec<usize>> = match ordering {
        BdOrdering::Greedy => None,
        BdOrdering::Fixed(names) => {
            let mut idx = Vec::with_capacity(names.len());
            for n in names {
                let f = features
                    .iter()
                    .position(|x| x == n)
                    .ok_or_else(|| Error::UnknownColumn(n.clone()))?;
                if idx.contains(&f) {
                    return Err(Error::InvalidParameter(format!("'{n}' repeated in ordering")));
                }
                idx.push(f);
            }
            if idx.len() != features.len() {
                return Err(Error::InvalidParameter(
                    "fixed ordering must list every model feature".into(),
                ));
            }
            Some(idx)
        }
    };

    for step in 0..features.len() {
        let (next, value) = match &order {
            Some(o) => {
                let f = o[step];
                let mut s = fixed.clone();
                s.push(f);
                (f, valuer.value(&s)?)
            }
            None => {
                let remaining: Vec<usize> = (0..features.len()).filter(|f| !fixed.contains(f)).collect();
                let values = remaining
                    .par_iter()
                    .map(|&f| {
                        let mut s = fixed.clone();
                        s.push(f);
                        valuer.value(&s)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let mut best = 0;
                for k in 1..remaining.len() {
                    let gain = (values[k] - current).abs();
                    let best_gain = (values[best] - current).abs();
                    if gain > best_gain
                        || (gain == best_gain && features[remaining[k]] < features[remaining[best]])
                    {
                        best = k;
                    }
                }
                (remaining[best], values[best])
            }
        };
        contributions.push(Contribution {
            feature: features[next].clone(),
            value: instance[valuer.cols[next]],
            delta: value - current,
        });
        fixed.push(next);
        current = value;
    }

    Ok(BreakDownResult {
        schema_version: SCHEMA_VERSION,
        model_kind: model.kind(),
        intercept,
        contributions,
        final_prediction: exact,
    })
}
