//! Credit default modelling with model-agnostic explanations.
//!
//! The crate covers the full workflow: tabular ingestion and temporal
//! splitting ([`data`]), Weight-of-Evidence binning ([`woe`]), five model
//! families behind the [`models::Predictor`] interface, discrimination metrics
//! ([`metrics`]), staged variable preselection ([`selection`]) and
//! permutation importance, partial dependence, ceteris paribus and break-down
//! explanations ([`explain`]).
//!
//! Target coding: 1 = bad (defaulter), 0 = good. Every score is a probability
//! of the bad class, so higher scores mean riskier borrowers.

pub mod config;
pub mod data;
pub mod error;
pub mod explain;
pub mod io;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod selection;
pub mod synth;
pub mod woe;

pub use data::{Dataset, Matrix, SplitSet};
pub use error::{Error, Result};
pub use metrics::MetricReport;
pub use models::{FittedModel, ModelArtifact, ModelKind, ModelSpec, Predictor};

/// Version stamped into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;
