use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::models::{ModelKind, Predictor};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpProfile {
    pub schema_version: u32,
    pub model_kind: ModelKind,
    pub feature: String,
    pub grid: Vec<f64>,
    pub mean_prediction: Vec<f64>,
    pub n_background: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpSurface {
    pub schema_version: u32,
    pub model_kind: ModelKind,
    pub features: [String; 2],
    pub grid_x: Vec<f64>,
    pub grid_y: Vec<f64>,
    /// `mean_prediction[i][k]` is at `(grid_x[i], grid_y[k])`.
    pub mean_prediction: Vec<Vec<f64>>,
    pub n_background: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpProfile {
    pub schema_version: u32,
    pub model_kind: ModelKind,
    pub instance: usize,
    pub feature: String,
    pub grid: Vec<f64>,
    pub prediction: Vec<f64>,
    pub anchor_value: f64,
    /// Prediction on the untouched instance.
    pub anchor: f64,
}

fn column_of(x: &Matrix, feature: &str) -> Result<usize> {
    x.col_index(feature).ok_or_else(|| Error::UnknownColumn(feature.to_string()))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean prediction over the background rows with `feature` set to each grid
/// point in turn.
pub fn partial_dependence(model: &dyn Predictor, x: &Matrix, feature: &str, grid: &GridSpec) -> Result<PdpProfile> {
    if x.n_rows() == 0 {
        return Err(Error::InvalidParameter("empty background".into()));
    }
    let j = column_of(x, feature)?;
    let points = grid.resolve(&x.column(j))?;
    let mean_prediction = points
        .par_iter()
        .map(|&z| {
            let mut m = x.clone();
            m.fill_column(j, z);
            Ok(mean(&model.predict(&m)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PdpProfile {
        schema_version: SCHEMA_VERSION,
        model_kind: model.kind(),
        feature: feature.to_string(),
        grid: points,
        mean_prediction,
        n_background: x.n_rows(),
    })
}

pub fn partial_dependence_2d(
    model: &dyn Predictor,
    x: &Matrix,
    features: [&str; 2],
    grids: [&GridSpec; 2],
) -> Result<PdpSurface> {
    if x.n_rows() == 0 {
        return Err(Error::InvalidParameter("empty background".into()));
    }
    let ja = column_of(x, features[0])?;
    let jb = column_of(x, features[1])?;
    let ga = grids[0].resolve(&x.column(ja))?;
    let gb = grids[1].resolve(&x.column(jb))?;
    let mean_prediction = ga
        .par_iter()
        .map(|&a| {
            gb.iter()
                .map(|&b| {
                    let mut m = x.clone();
                    m.fill_column(ja, a);
                    m.fill_column(jb, b);
                    Ok(mean(&model.predict(&m)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PdpSurface {
        schema_version: SCHEMA_VERSION,
        model_kind: model.kind(),
        features: [features[0].to_string(), features[1].to_string()],
        grid_x: ga,
        grid_y: gb,
        mean_prediction,
        n_background: x.n_rows(),
    })
}

/// Profile of one instance (`row` of `data`) along `feature`. Quantile grids
/// are taken from `data`; the instance's own value is always on the grid.
pub fn ceteris_paribus(
    model: &dyn Predictor,
    data: &Matrix,
    row: usize,
    feature: &str,
    grid: &GridSpec,
) -> Result<CpProfile> {
    if row >= data.n_rows() {
        return Err(Error::OutOfRange(format!(
            "instance {row} outside 0..{}",
            data.n_rows()
        )));
    }
    let j = column_of(data, feature)?;
    let points = grid.resolve(&data.column(j))?;
    ceteris_paribus_at(model, data.names(), data.row(row), row, feature, &points)
}

/// Profile of an explicit instance laid out in `names` order.
pub fn ceteris_paribus_at(
    model: &dyn Predictor,
    names: &[String],
    instance: &[f64],
    instance_id: usize,
    feature: &str,
    points: &[f64],
) -> Result<CpProfile> {
    let j = names
        .iter()
        .position(|n| n == feature)
        .ok_or_else(|| Error::UnknownColumn(feature.to_string()))?;
    let actual = instance[j];
    let mut grid = points.to_vec();
    grid.push(actual);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut m = Matrix::repeat_row(names, instance, grid.len());
    m.set_column(j, &grid);
    let prediction = model.predict(&m)?;
    let anchor = model.predict(&Matrix::repeat_row(names, instance, 1))?[0];
    Ok(CpProfile {
        schema_version: SCHEMA_VERSION,
        model_kind: model.kind(),
        instance: instance_id,
        feature: feature.to_string(),
        grid,
        prediction,
        anchor_value: actual,
        anchor,
    })
}
