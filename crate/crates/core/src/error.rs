use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Config(String),

    #[error("MissingColumn: column '{0}' not found in header")]
    MissingColumn(String),
    #[error("BadTarget: row {row} has target value '{value}', expected 0 or 1")]
    BadTarget { row: usize, value: String },
    #[error("EmptyFile: {0} has no data rows")]
    EmptyFile(String),
    #[error("UnknownColumn: '{0}'")]
    UnknownColumn(String),
    #[error("DuplicateColumn: '{0}'")]
    DuplicateColumn(String),
    #[error("NotCategorical: column '{0}' is numeric")]
    NotCategorical(String),
    #[error("BadDate: row {row} has unparseable date '{value}'")]
    BadDate { row: usize, value: String },
    #[error("MissingDate: dataset has no observation dates")]
    MissingDate,
    #[error("EmptyPartition: split part '{0}' has no rows")]
    EmptyPartition(String),
    #[error("MissingValues: column '{0}' still has missing values")]
    MissingValues(String),
    #[error("OneClassOnly: labels contain a single class")]
    OneClassOnly,
    #[error("LengthMismatch: {0}")]
    LengthMismatch(String),
    #[error("SingularHessian: Newton system is not positive definite")]
    SingularHessian,
    #[error("FeatureMismatch: model feature '{0}' is absent from the data")]
    FeatureMismatch(String),
    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
    #[error("OutOfRange: {0}")]
    OutOfRange(String),
    #[error("MissingArtifact: {0}")]
    MissingArtifact(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input or a violated contract, as opposed
    /// to failures inside the engine or the environment.
    pub fn is_contract(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::SingularHessian)
    }
}
