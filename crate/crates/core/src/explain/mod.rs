//! Model-agnostic explanations: permutation feature importance, partial
//! dependence, ceteris paribus profiles and break-down attributions.
//!
//! Every explainer only calls [`Predictor::predict`](crate::models::Predictor),
//! so it runs unchanged against any model family. Inputs are never mutated.

mod breakdown;
mod grid;
mod pfi;
mod profile;
pub mod svg;

pub use breakdown::{break_down, BreakDownResult, BdOrdering, Contribution};
pub use grid::GridSpec;
pub use pfi::{permutation_importance, PfiFeature, PfiResult};
pub use profile::{
    ceteris_paribus, ceteris_paribus_at, partial_dependence, partial_dependence_2d, CpProfile, PdpProfile,
    PdpSurface,
};
