//! Synthetic credit data with a known generative process.
//!
//! Each informative feature is a monotone transform of a latent standard
//! normal `z` and contributes a nonlinear monotone term to the log-odds of
//! default; the five transform shapes cycle when more than five informative
//! features are requested:
//!
//! | shape | observed value        | log-odds term                      |
//! |-------|-----------------------|------------------------------------|
//! | 0     | `z`                   | `2·tanh(z)` (saturating)           |
//! | 1     | `exp(z)` (lognormal)  | `−1.2·z = −1.2·ln(x)`              |
//! | 2     | `z`                   | `2·(1[z > 0.8] − P(z > 0.8))` (step) |
//! | 3     | `Poisson(4)` count    | `2·(√x − 2)`                       |
//! | 4     | `z`                   | `0.8·(exp(0.8z) − e^0.32)`         |
//!
//! Noise features are independent of the target. Observation dates are
//! uniform over a window; after `drift_date` the informative terms are scaled
//! by `1 − drift`, so later data is harder to rank. The intercept is solved
//! so the expected default rate equals `base_rate`.

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Feature};
use crate::error::{Error, Result};
use crate::models::sigmoid;
use crate::rng;

const SYNTH_STREAM: u64 = 0x5147_0001;
const STEP_AT: f64 = 0.8;
/// P(Z > 0.8) for a standard normal.
const STEP_P: f64 = 0.211_855_398_583_397_2;
const CHANNELS: [&str; 3] = ["branch", "online", "partner"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub n_informative: usize,
    /// Includes one categorical noise column, `noise_channel`, when non-zero.
    pub n_noise: usize,
    pub n_constant: usize,
    pub base_rate: f64,
    /// Fractional weakening of the signal after `drift_date`.
    pub drift: f64,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub drift_date: NaiveDate,
    /// Share of missing cells in `inf_02` and `noise_02` respectively.
    pub missing_informative: f64,
    pub missing_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_rows: 20_000,
            n_informative: 5,
            n_noise: 15,
            n_constant: 0,
            base_rate: 0.3,
            drift: 0.35,
            start_date: NaiveDate::from_ymd_opt(2017, 10, 1).expect("valid date"),
            end_date: NaiveDate::from_ymd_opt(2018, 11, 30).expect("valid date"),
            drift_date: NaiveDate::from_ymd_opt(2018, 8, 31).expect("valid date"),
            missing_informative: 0.03,
            missing_noise: 0.05,
            seed: 1,
        }
    }
}

pub fn informative_name(k: usize) -> String {
    format!("inf_{:02}", k + 1)
}

pub fn noise_name(k: usize) -> String {
    format!("noise_{:02}", k + 1)
}

pub fn constant_name(k: usize) -> String {
    format!("const_{:02}", k + 1)
}

/// True for columns (or dummy columns) derived from an informative feature.
pub fn is_informative(column: &str) -> bool {
    column.starts_with("inf_")
}

fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Observed value and log-odds term for a latent draw.
fn informative_term<R: Rng>(shape: usize, rng: &mut R, count: &Poisson<f64>) -> (f64, f64) {
    match shape % 5 {
        0 => {
            let z = std_normal(rng);
            (z, 2.0 * z.tanh())
        }
        1 => {
            let z = std_normal(rng);
            (z.exp(), -1.2 * z)
        }
        2 => {
            let z = std_normal(rng);
            let step = if z > STEP_AT { 1.0 } else { 0.0 };
            (z, 2.0 * (step - STEP_P))
        }
        3 => {
            let c: f64 = count.sample(rng);
            (c, 2.0 * (c.sqrt() - 2.0))
        }
        _ => {
            let z = std_normal(rng);
            (z, 0.8 * ((0.8 * z).exp() - 0.32f64.exp()))
        }
    }
}

fn noise_value<R: Rng>(k: usize, rng: &mut R, count: &Poisson<f64>) -> f64 {
    match k % 4 {
        0 => std_normal(rng),
        1 => rng.random::<f64>() * 100.0,
        2 => std_normal(rng).exp(),
        _ => count.sample(rng),
    }
}

/// Intercept giving mean default probability `target` for the given terms.
fn solve_intercept(signal: &[f64], target: f64) -> f64 {
    let rate = |b: f64| signal.iter().map(|s| sigmoid(b + s)).sum::<f64>() / signal.len() as f64;
    let (mut lo, mut hi) = (-30.0, 30.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn generate(config: &SynthConfig) -> Result<Dataset> {
    if config.n_rows < 2 {
        return Err(Error::InvalidParameter("n_rows must be at least 2".into()));
    }
    if !(config.base_rate > 0.0 && config.base_rate < 1.0) {
        return Err(Error::InvalidParameter("base_rate must lie in (0, 1)".into()));
    }
    if !(0.0..=1.0).contains(&config.drift) {
        return Err(Error::InvalidParameter("drift must lie in [0, 1]".into()));
    }
    if config.end_date < config.start_date {
        return Err(Error::InvalidParameter("end_date precedes start_date".into()));
    }
    let n = config.n_rows;
    let span = (config.end_date - config.start_date).num_days() as u64;
    let count = Poisson::new(4.0).expect("positive rate");
    let mut rng = rng::stream(config.seed, &[SYNTH_STREAM]);

    let mut informative = vec![Vec::with_capacity(n); config.n_informative];
    let mut noise: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(n); config.n_noise.saturating_sub(1)];
    let mut channel = Vec::with_capacity(n);
    let mut dates = Vec::with_capacity(n);
    let mut signal = Vec::with_capacity(n);

    for _ in 0..n {
        let date = config.start_date + Days::new(rng.random_range(0..=span));
        let scale = if date > config.drift_date { 1.0 - config.drift } else { 1.0 };
        let mut s = 0.0;
        for (k, col) in informative.iter_mut().enumerate() {
            let (x, term) = informative_term(k, &mut rng, &count);
            s += term;
            let missing = k == 1 && rng.random::<f64>() < config.missing_informative;
            col.push(if missing { None } else { Some(x) });
        }
        for (k, col) in noise.iter_mut().enumerate() {
            let x = noise_value(k, &mut rng, &count);
            let missing = k == 1 && rng.random::<f64>() < config.missing_noise;
            col.push(if missing { None } else { Some(x) });
        }
        if config.n_noise > 0 {
            channel.push(Some(CHANNELS[rng.random_range(0..CHANNELS.len())].to_string()));
        }
        dates.push(date);
        signal.push(scale * s);
    }

    let intercept = solve_intercept(&signal, config.base_rate);
    let target: Vec<u8> = signal
        .iter()
        .map(|s| u8::from(rng.random::<f64>() < sigmoid(intercept + s)))
        .collect();

    let mut columns: Vec<Feature> = informative
        .into_iter()
        .enumerate()
        .map(|(k, v)| Feature::numeric(informative_name(k), v))
        .collect();
    columns.extend(noise.into_iter().enumerate().map(|(k, v)| Feature::numeric(noise_name(k), v)));
    if config.n_noise > 0 {
        columns.push(Feature::categorical("noise_channel", channel));
    }
    columns.extend((0..config.n_constant).map(|k| Feature::numeric(constant_name(k), vec![Some(1.0); n])));
    Dataset::new(columns, target, Some(dates))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape() {
        let d = generate(&SynthConfig {
            n_rows: 4000,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_eq!(d.columns().len(), 20);
        assert_eq!(d.columns().iter().filter(|c| is_informative(&c.name)).count(), 5);
        let rate = d.target().iter().map(|&y| y as f64).sum::<f64>() / 4000.0;
        assert!((rate - 0.3).abs() < 0.03, "{rate}");
        let missing = d.column("inf_02").unwrap().n_missing() as f64 / 4000.0;
        assert!((missing - 0.03).abs() < 0.01, "{missing}");
        let dates = d.dates().unwrap();
        let cfg = SynthConfig::default();
        assert!(dates.iter().all(|t| *t >= cfg.start_date && *t <= cfg.end_date));
    }

    #[test]
    fn seeded() {
        let cfg = SynthConfig {
            n_rows: 500,
            ..SynthConfig::default()
        };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = generate(&SynthConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(generate(&cfg).unwrap(), other);
    }

    #[test]
    fn intercept_hits_rate() {
        let signal = [-1.0, 0.0, 2.0];
        let b = solve_intercept(&signal, 0.4);
        let rate: f64 = signal.iter().map(|s| sigmoid(b + s)).sum::<f64>() / 3.0;
        assert!((rate - 0.4).abs() < 1e-12);
    }

    #[test]
    fn constants_and_wide_layout() {
        let d = generate(&SynthConfig {
            n_rows: 300,
            n_informative: 10,
            n_noise: 85,
            n_constant: 5,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_eq!(d.columns().len(), 100);
        assert_eq!(d.column("const_05").unwrap().n_unique(), 1);
    }
}
