//! Tabular credit data: ingestion, imputation, encoding and temporal splits.

mod csv_io;
mod dataset;
mod encode;
mod impute;
mod matrix;
mod split;

pub use csv_io::{load_csv, read_csv, write_csv, Schema};
pub use dataset::{ColumnValues, Dataset, Feature, FeatureKind};
pub use encode::{dummy_encode, DummyEncoder, LevelMap};
pub use impute::{impute_mean, Imputer, MISSING_LEVEL};
pub use matrix::Matrix;
pub use split::{split_indices, temporal_split, SplitIndices, SplitParams, SplitSet};
