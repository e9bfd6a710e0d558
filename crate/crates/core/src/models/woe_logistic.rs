use serde::{Deserialize, Serialize};

use super::logistic::{train_logistic, LogisticConfig, LogisticModel};
use crate::data::Matrix;
use crate::error::Result;
use crate::woe::{fit_woe_tables_matrix, BinningConfig, WoeTable};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WoeLogisticConfig {
    pub binning: BinningConfig,
    pub logistic: LogisticConfig,
}

/// Logistic regression on WOE-transformed features. Takes raw features; the
/// transformation fitted on training data is part of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoeLogisticModel {
    pub feature_names: Vec<String>,
    pub tables: Vec<WoeTable>,
    pub logistic: LogisticModel,
}

impl WoeLogisticModel {
    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        self.tables
            .iter()
            .zip(row)
            .map(|(t, &v)| t.woe_numeric(Some(v)))
            .collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.logistic.predict_row(&self.transform_row(row))
    }
}

pub fn train_woe_logistic(x: &Matrix, y: &[u8], config: &WoeLogisticConfig) -> Result<WoeLogisticModel> {
    let tables = fit_woe_tables_matrix(x, y, &config.binning)?;
    let mut data = Vec::with_capacity(x.n_rows() * x.n_cols());
    for r in x.rows() {
        data.extend(tables.iter().zip(r).map(|(t, &v)| t.woe_numeric(Some(v))));
    }
    let transformed = Matrix::new(x.names().to_vec(), data, x.n_rows())?;
    let logistic = train_logistic(&transformed, y, &config.logistic)?;
    Ok(WoeLogisticModel {
        feature_names: x.names().to_vec(),
        tables,
        logistic,
    })
}
