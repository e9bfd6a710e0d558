use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::dataset::{ColumnValues, Dataset, Feature, FeatureKind};
use crate::error::{Error, Result};

/// Column-kind declarations for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schema {
    pub target: String,
    pub date_column: Option<String>,
    pub date_format: String,
    /// Columns read as numeric. Unlisted columns are inferred when `infer_unlisted` is set.
    pub numeric: Vec<String>,
    pub categorical: Vec<String>,
    pub infer_unlisted: bool,
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            target: "default_flag".into(),
            date_column: Some("obs_date".into()),
            date_format: "%Y-%m-%d".into(),
            numeric: Vec::new(),
            categorical: Vec::new(),
            infer_unlisted: true,
        }
    }
}

fn parse_target(raw: &str, row: usize) -> Result<u8> {
    match raw.trim().parse::<f64>() {
        Ok(0.0) => Ok(0),
        Ok(1.0) => Ok(1),
        _ => Err(Error::BadTarget {
            row,
            value: raw.to_string(),
        }),
    }
}

fn parse_numeric(raw: &str, missing_token: &str) -> Option<f64> {
    let t = raw.trim();
    if t.is_empty() || t == missing_token {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema, missing_token: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, missing_token, &path.display().to_string())
}

pub fn read_csv<R: std::io::Read>(
    reader: R,
    schema: &Schema,
    missing_token: &str,
    source_name: &str,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyFile(source_name.to_string()));
    }
    let index: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let lookup = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };

    let target_idx = lookup(&schema.target)?;
    let date_idx = schema.date_column.as_deref().map(lookup).transpose()?;

    let mut declared: Vec<(usize, FeatureKind)> = Vec::new();
    for n in &schema.numeric {
        declared.push((lookup(n)?, FeatureKind::Numeric));
    }
    for n in &schema.categorical {
        declared.push((lookup(n)?, FeatureKind::Categorical));
    }

    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    if records.is_empty() {
        return Err(Error::EmptyFile(source_name.to_string()));
    }

    let mut kinds: Vec<Option<FeatureKind>> = vec![None; header.len()];
    for (i, k) in declared {
        kinds[i] = Some(k);
    }
    if schema.infer_unlisted {
        for (i, kind) in kinds.iter_mut().enumerate() {
            if kind.is_some() || i == target_idx || Some(i) == date_idx {
                continue;
            }
            let all_numeric = records.iter().all(|r| {
                let t = r.get(i).unwrap_or("").trim();
                t.is_empty() || t == missing_token || t.parse::<f64>().is_ok()
            });
            *kind = Some(if all_numeric {
                FeatureKind::Numeric
            } else {
                FeatureKind::Categorical
            });
        }
    }

    let target = records
        .iter()
        .enumerate()
        .map(|(row, r)| parse_target(r.get(target_idx).unwrap_or(""), row))
        .collect::<Result<Vec<u8>>>()?;

    let dates = match date_idx {
        Some(di) => Some(
            records
                .iter()
                .enumerate()
                .map(|(row, r)| {
                    let raw = r.get(di).unwrap_or("").trim();
                    NaiveDate::parse_from_str(raw, &schema.date_format).map_err(|_| Error::BadDate {
                        row,
                        value: raw.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };

    let columns = kinds
        .iter()
        .enumerate()
        .filter_map(|(i, k)| k.map(|k| (i, k)))
        .map(|(i, kind)| {
            let cell = |r: &csv::StringRecord| r.get(i).unwrap_or("").to_string();
            let values = match kind {
                FeatureKind::Numeric => ColumnValues::Numeric(
                    records.iter().map(|r| parse_numeric(&cell(r), missing_token)).collect(),
                ),
                FeatureKind::Categorical => ColumnValues::Categorical(
                    records
                        .iter()
                        .map(|r| {
                            let v = cell(r);
                            let t = v.trim();
                            (!t.is_empty() && t != missing_token).then(|| t.to_string())
                        })
                        .collect(),
                ),
            };
            Feature {
                name: header[i].clone(),
                values,
            }
        })
        .collect();

    Dataset::new(columns, target, dates)
}

/// Writes features, then target, then dates (when present).
pub fn write_csv(
    d: &Dataset,
    path: impl AsRef<Path>,
    target_name: &str,
    date_name: &str,
    missing_token: &str,
) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header: Vec<&str> = d.columns().iter().map(|c| c.name.as_str()).collect();
        header.push(target_name);
        if d.dates().is_some() {
            header.push(date_name);
        }
        w.write_record(&header)?;
        for row in 0..d.n_rows() {
            let mut rec: Vec<String> = d
                .columns()
                .iter()
                .map(|c| match &c.values {
                    ColumnValues::Numeric(v) => {
                        v[row].map_or_else(|| missing_token.to_string(), |x| x.to_string())
                    }
                    ColumnValues::Categorical(v) => {
                        v[row].clone().unwrap_or_else(|| missing_token.to_string())
                    }
                })
                .collect();
            rec.push(d.target()[row].to_string());
            if let Some(dates) = d.dates() {
                rec.push(dates[row].format("%Y-%m-%d").to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}
