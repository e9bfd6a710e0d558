//! Shared fixtures for the benchmarks.

use scorecard_core::data::Matrix;
use scorecard_core::pipeline::Preprocessor;
use scorecard_core::synth::{generate, SynthConfig};

/// Preprocessed synthetic design matrix and labels.
pub fn synthetic(n_rows: usize, seed: u64) -> (Matrix, Vec<u8>) {
    let d = generate(&SynthConfig {
        n_rows,
        seed,
        ..SynthConfig::default()
    })
    .expect("synthetic data");
    let pre = Preprocessor::fit(&d).expect("preprocessing");
    (pre.matrix(&d).expect("design matrix"), d.target().to_vec())
}
