//! Supervised binning and Weight-of-Evidence transformation.
//!
//! WOE per bin is `ln(dist_good / dist_bad)`; with the target coded 1 = bad a
//! higher WOE marks a safer bin. Information Value sums
//! `(dist_good - dist_bad) * woe` over bins.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnValues, Dataset, Feature, Matrix};
use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinningConfig {
    pub max_bins: usize,
    /// Smallest share of all rows a bin may hold after merging.
    pub min_bin_frac: f64,
    /// Pseudo-count added to every bin's good and bad counts.
    pub smoothing: f64,
    /// Merge adjacent bins until WOE is monotone across numeric bins.
    pub monotone: bool,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig {
            max_bins: 10,
            min_bin_frac: 0.05,
            smoothing: 0.5,
            monotone: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cuts {
    /// Ascending thresholds; bin `b` holds values in `(cuts[b-1], cuts[b]]`.
    Numeric(Vec<f64>),
    Categorical(BTreeMap<String, usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub feature: String,
    pub cuts: Cuts,
    /// Number of bins for observed values.
    pub n_bins: usize,
    /// Dedicated bin for missing values, present when the fit data had any.
    pub missing_bin: Option<usize>,
    /// Bin used for values with no bin of their own (unseen levels, missing
    /// values when there is no missing bin): the most populated bin.
    pub fallback_bin: usize,
    /// The feature had at most one distinct observed value.
    pub degenerate: bool,
}

impl BinningSpec {
    pub fn total_bins(&self) -> usize {
        self.n_bins + usize::from(self.missing_bin.is_some())
    }

    pub fn bin_of_numeric(&self, v: Option<f64>) -> usize {
        match (v, &self.cuts) {
            (None, _) => self.missing_bin.unwrap_or(self.fallback_bin),
            (Some(v), Cuts::Numeric(cuts)) => cuts.partition_point(|&c| c < v),
            (Some(_), Cuts::Categorical(_)) => self.fallback_bin,
        }
    }

    pub fn bin_of_level(&self, v: Option<&str>) -> usize {
        match (v, &self.cuts) {
            (None, _) => self.missing_bin.unwrap_or(self.fallback_bin),
            (Some(l), Cuts::Categorical(map)) => map.get(l).copied().unwrap_or(self.fallback_bin),
            (Some(_), Cuts::Numeric(_)) => self.fallback_bin,
        }
    }

    fn bins_of(&self, x: &ColumnValues) -> Vec<usize> {
        match x {
            ColumnValues::Numeric(v) => v.iter().map(|&x| self.bin_of_numeric(x)).collect(),
            ColumnValues::Categorical(v) => v.iter().map(|x| self.bin_of_level(x.as_deref())).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    good: usize,
    bad: usize,
}

impl Counts {
    fn rows(&self) -> usize {
        self.good + self.bad
    }

    fn merged(self, o: Counts) -> Counts {
        Counts {
            good: self.good + o.good,
            bad: self.bad + o.bad,
        }
    }
}

/// Linear-interpolation sample quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn smoothed_woe(c: &[Counts], smoothing: f64) -> Vec<f64> {
    let total_good: usize = c.iter().map(|b| b.good).sum();
    let total_bad: usize = c.iter().map(|b| b.bad).sum();
    let k = c.len() as f64;
    c.iter()
        .map(|b| {
            let dg = (b.good as f64 + smoothing) / (total_good as f64 + smoothing * k);
            let db = (b.bad as f64 + smoothing) / (total_bad as f64 + smoothing * k);
            (dg / db).ln()
        })
        .collect()
}

/// Merges adjacent groups until every group is large enough and holds both
/// classes, and at most `max_groups` remain. Returns, for each group, the
/// index of the first original group it absorbed.
fn merge_to_valid(mut groups: Vec<Counts>, min_rows: f64, max_groups: usize) -> Vec<(usize, Counts)> {
    let mut starts: Vec<usize> = (0..groups.len()).collect();
    while groups.len() > 1 {
        let invalid = |c: &Counts| (c.rows() as f64) < min_rows || c.good == 0 || c.bad == 0;
        let victim = if groups.len() > max_groups {
            (0..groups.len()).min_by_key(|&i| groups[i].rows())
        } else {
            (0..groups.len())
                .filter(|&i| invalid(&groups[i]))
                .min_by_key(|&i| groups[i].rows())
        };
        let Some(i) = victim else { break };
        let j = if i == 0 {
            1
        } else if i == groups.len() - 1 {
            i - 1
        } else if groups[i + 1].rows() < groups[i - 1].rows() {
            i + 1
        } else {
            i - 1
        };
        let (a, b) = (i.min(j), i.max(j));
        groups[a] = groups[a].merged(groups[b]);
        groups.remove(b);
        starts.remove(b);
    }
    starts.into_iter().zip(groups).collect()
}

fn merge_to_monotone(mut groups: Vec<(usize, Counts)>, smoothing: f64) -> Vec<(usize, Counts)> {
    loop {
        if groups.len() < 3 {
            return groups;
        }
        let counts: Vec<Counts> = groups.iter().map(|g| g.1).collect();
        let woe = smoothed_woe(&counts, smoothing);
        let rising = woe[woe.len() - 1] >= woe[0];
        let violation = (0..woe.len() - 1).find(|&i| {
            if rising {
                woe[i + 1] < woe[i]
            } else {
                woe[i + 1] > woe[i]
            }
        });
        let Some(i) = violation else { return groups };
        let merged = groups[i].1.merged(groups[i + 1].1);
        groups[i].1 = merged;
        groups.remove(i + 1);
    }
}

pub fn fit_bins(name: &str, x: &ColumnValues, y: &[u8], config: &BinningConfig) -> Result<BinningSpec> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!("feature '{name}' vs target")));
    }
    if config.max_bins < 2 {
        return Err(Error::InvalidParameter("max_bins must be at least 2".into()));
    }
    let n_bad = y.iter().filter(|&&v| v == 1).count();
    if n_bad == 0 || n_bad == y.len() {
        return Err(Error::OneClassOnly);
    }
    let min_rows = config.min_bin_frac * y.len() as f64;
    let has_missing = match x {
        ColumnValues::Numeric(v) => v.iter().any(|x| x.is_none()),
        ColumnValues::Categorical(v) => v.iter().any(|x| x.is_none()),
    };

    let (cuts, counts) = match x {
        ColumnValues::Numeric(values) => {
            let mut sorted: Vec<f64> = values.iter().flatten().copied().collect();
            sorted.sort_by(f64::total_cmp);
            let mut cuts: Vec<f64> = Vec::new();
            if let (Some(&lo), Some(&hi)) = (sorted.first(), sorted.last()) {
                if lo < hi {
                    for k in 1..config.max_bins {
                        let c = quantile_sorted(&sorted, k as f64 / config.max_bins as f64);
                        if c < hi && cuts.last().is_none_or(|&last| c > last) {
                            cuts.push(c);
                        }
                    }
                }
            }
            let mut groups = vec![Counts::default(); cuts.len() + 1];
            for (v, &t) in values.iter().zip(y) {
                if let Some(v) = v {
                    let b = cuts.partition_point(|&c| c < *v);
                    if t == 1 {
                        groups[b].bad += 1;
                    } else {
                        groups[b].good += 1;
                    }
                }
            }
            let mut merged = merge_to_valid(groups, min_rows, config.max_bins);
            if config.monotone {
                merged = merge_to_monotone(merged, config.smoothing);
            }
            let kept: Vec<f64> = merged.iter().skip(1).map(|(start, _)| cuts[start - 1]).collect();
            let counts: Vec<Counts> = merged.into_iter().map(|g| g.1).collect();
            (Cuts::Numeric(kept), counts)
        }
        ColumnValues::Categorical(values) => {
            let mut per_level: BTreeMap<&str, Counts> = BTreeMap::new();
            for (v, &t) in values.iter().zip(y) {
                if let Some(l) = v {
                    let c = per_level.entry(l.as_str()).or_default();
                    if t == 1 {
                        c.bad += 1;
                    } else {
                        c.good += 1;
                    }
                }
            }
            let mut levels: Vec<(&str, Counts)> = per_level.into_iter().collect();
            levels.sort_by(|a, b| {
                let ra = a.1.bad as f64 / a.1.rows() as f64;
                let rb = b.1.bad as f64 / b.1.rows() as f64;
                ra.total_cmp(&rb).then(a.0.cmp(b.0))
            });
            let merged = merge_to_valid(levels.iter().map(|l| l.1).collect(), min_rows, config.max_bins);
            let mut map = BTreeMap::new();
            for (bin, w) in merged.windows(2).enumerate() {
                for l in &levels[w[0].0..w[1].0] {
                    map.insert(l.0.to_string(), bin);
                }
            }
            if let Some((start, _)) = merged.last() {
                for l in &levels[*start..] {
                    map.insert(l.0.to_string(), merged.len() - 1);
                }
            }
            (Cuts::Categorical(map), merged.into_iter().map(|g| g.1).collect())
        }
    };

    let n_bins = counts.len().max(1);
    let degenerate = x_distinct_at_most_one(x);
    if degenerate {
        log::warn!("feature '{name}' is degenerate: single bin");
    }
    let fallback_bin = counts
        .iter()
        .enumerate()
        .fold((0, 0), |best, (i, c)| if c.rows() > best.1 { (i, c.rows()) } else { best })
        .0;
    Ok(BinningSpec {
        feature: name.to_string(),
        cuts,
        n_bins,
        missing_bin: has_missing.then_some(n_bins),
        fallback_bin,
        degenerate,
    })
}

fn x_distinct_at_most_one(x: &ColumnValues) -> bool {
    Feature {
        name: String::new(),
        values: x.clone(),
    }
    .n_unique()
        <= 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoeBin {
    pub bin: usize,
    pub n_good: usize,
    pub n_bad: usize,
    pub dist_good: f64,
    pub dist_bad: f64,
    pub woe: f64,
    pub iv_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoeTable {
    pub feature: String,
    pub spec: BinningSpec,
    pub bins: Vec<WoeBin>,
    pub iv: f64,
}

impl WoeTable {
    pub fn woe_numeric(&self, v: Option<f64>) -> f64 {
        self.bins[self.spec.bin_of_numeric(v)].woe
    }

    pub fn woe_level(&self, v: Option<&str>) -> f64 {
        self.bins[self.spec.bin_of_level(v)].woe
    }
}

/// WOE table from per-bin good/bad counts.
pub fn woe_from_counts(feature: &str, spec: BinningSpec, counts: &[(usize, usize)], smoothing: f64) -> WoeTable {
    let total_good: usize = counts.iter().map(|c| c.0).sum();
    let total_bad: usize = counts.iter().map(|c| c.1).sum();
    let k = counts.len() as f64;
    let bins: Vec<WoeBin> = counts
        .iter()
        .enumerate()
        .map(|(bin, &(g, b))| {
            let dist_good = (g as f64 + smoothing) / (total_good as f64 + smoothing * k);
            let dist_bad = (b as f64 + smoothing) / (total_bad as f64 + smoothing * k);
            let woe = (dist_good / dist_bad).ln();
            WoeBin {
                bin,
                n_good: g,
                n_bad: b,
                dist_good,
                dist_bad,
                woe,
                iv_term: (dist_good - dist_bad) * woe,
            }
        })
        .collect();
    let iv = bins.iter().map(|b| b.iv_term).sum();
    WoeTable {
        feature: feature.to_string(),
        spec,
        bins,
        iv,
    }
}

pub fn compute_woe(spec: &BinningSpec, x: &ColumnValues, y: &[u8], smoothing: f64) -> Result<WoeTable> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!("feature '{}' vs target", spec.feature)));
    }
    let mut counts = vec![(0usize, 0usize); spec.total_bins()];
    for (b, &t) in spec.bins_of(x).into_iter().zip(y) {
        if t == 1 {
            counts[b].1 += 1;
        } else {
            counts[b].0 += 1;
        }
    }
    Ok(woe_from_counts(&spec.feature, spec.clone(), &counts, smoothing))
}

/// Fits a table for every column of `d`, in column order.
pub fn fit_woe_tables(d: &Dataset, config: &BinningConfig) -> Result<Vec<WoeTable>> {
    d.columns()
        .par_iter()
        .map(|c| {
            let spec = fit_bins(&c.name, &c.values, d.target(), config)?;
            compute_woe(&spec, &c.values, d.target(), config.smoothing)
        })
        .collect()
}

/// Tables for every column of a numeric matrix.
pub fn fit_woe_tables_matrix(x: &Matrix, y: &[u8], config: &BinningConfig) -> Result<Vec<WoeTable>> {
    (0..x.n_cols())
        .into_par_iter()
        .map(|j| {
            let col = ColumnValues::Numeric(x.column(j).into_iter().map(Some).collect());
            let spec = fit_bins(&x.names()[j], &col, y, config)?;
            compute_woe(&spec, &col, y, config.smoothing)
        })
        .collect()
}

/// Replaces every covered column by its WOE values. Uncovered columns are
/// kept when `passthrough` is set and dropped otherwise.
pub fn woe_transform(d: &Dataset, tables: &[WoeTable], passthrough: bool) -> Result<Dataset> {
    let by_name: BTreeMap<&str, &WoeTable> = tables.iter().map(|t| (t.feature.as_str(), t)).collect();
    let mut cols = Vec::new();
    for c in d.columns() {
        match by_name.get(c.name.as_str()) {
            Some(t) => {
                let values = match &c.values {
                    ColumnValues::Numeric(v) => v.iter().map(|&x| Some(t.woe_numeric(x))).collect(),
                    ColumnValues::Categorical(v) => v.iter().map(|x| Some(t.woe_level(x.as_deref()))).collect(),
                };
                cols.push(Feature::numeric(c.name.clone(), values));
            }
            None if passthrough => cols.push(c.clone()),
            None => {}
        }
    }
    d.with_columns(cols)
}

/// On-disk form of a fitted table set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoeTableSet {
    pub schema_version: u32,
    pub tables: Vec<WoeTable>,
}

impl WoeTableSet {
    pub fn new(tables: Vec<WoeTable>) -> Self {
        WoeTableSet {
            schema_version: SCHEMA_VERSION,
            tables,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn numeric(v: &[f64]) -> ColumnValues {
        ColumnValues::Numeric(v.iter().map(|&x| Some(x)).collect())
    }

    #[test]
    fn uniform_feature_gets_quartile_bins() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let y: Vec<u8> = (0..1000).map(|i| (i % 3 == 0) as u8).collect();
        let cfg = BinningConfig {
            max_bins: 4,
            min_bin_frac: 0.05,
            ..BinningConfig::default()
        };
        let spec = fit_bins("u", &numeric(&xs), &y, &cfg).unwrap();
        assert_eq!(spec.n_bins, 4);
        let Cuts::Numeric(cuts) = &spec.cuts else { panic!() };
        for (c, q) in cuts.iter().zip([0.25, 0.5, 0.75]) {
            assert!((c - q).abs() < 1e-12);
        }
        let t = compute_woe(&spec, &numeric(&xs), &y, 0.5).unwrap();
        assert!(t.bins.iter().all(|b| b.n_good + b.n_bad == 250));
    }

    #[test]
    fn constant_feature_is_degenerate() {
        let spec = fit_bins("c", &numeric(&[2.0; 10]), &[0, 1, 0, 1, 0, 1, 0, 1, 0, 1], &BinningConfig::default()).unwrap();
        assert!(spec.degenerate);
        assert_eq!(spec.n_bins, 1);
    }

    #[test]
    fn missing_values_get_last_bin() {
        let mut v: Vec<Option<f64>> = (0..100).map(|i| Some(i as f64)).collect();
        for x in v.iter_mut().step_by(10) {
            *x = None;
        }
        let y: Vec<u8> = (0..100).map(|i| (i % 4 == 1) as u8).collect();
        let spec = fit_bins("m", &ColumnValues::Numeric(v.clone()), &y, &BinningConfig::default()).unwrap();
        assert_eq!(spec.missing_bin, Some(spec.n_bins));
        assert_eq!(spec.total_bins(), spec.n_bins + 1);
        assert_eq!(spec.bin_of_numeric(None), spec.n_bins);
    }

    #[test]
    fn woe_and_iv_by_hand() {
        // bin 0 holds 40% of goods and 10% of bads
        let spec = BinningSpec {
            feature: "f".into(),
            cuts: Cuts::Numeric(vec![0.5]),
            n_bins: 2,
            missing_bin: None,
            fallback_bin: 0,
            degenerate: false,
        };
        let t = woe_from_counts("f", spec, &[(40, 10), (60, 90)], 0.0);
        assert!((t.bins[0].woe - 4f64.ln()).abs() < 1e-12);
        assert!((t.bins[0].woe - 1.3863).abs() < 1e-4);
        assert!((t.bins[0].iv_term - 0.3 * 4f64.ln()).abs() < 1e-12);
        assert!((t.bins[0].iv_term - 0.4159).abs() < 1e-4);
    }

    #[test]
    fn equal_distributions_give_zero_woe() {
        let spec = BinningSpec {
            feature: "f".into(),
            cuts: Cuts::Numeric(vec![]),
            n_bins: 2,
            missing_bin: None,
            fallback_bin: 0,
            degenerate: false,
        };
        let t = woe_from_counts("f", spec, &[(30, 3), (70, 7)], 0.0);
        assert_eq!(t.bins[0].woe, 0.0);
        assert_eq!(t.bins[0].iv_term, 0.0);
        assert_eq!(t.iv, 0.0);
    }

    #[test]
    fn perfect_separation_stays_finite() {
        // two bins, goods all in bin 0, bads all in bin 1; smoothing 0.5
        let xs: Vec<f64> = (0..100).map(|i| (i >= 50) as u8 as f64).collect();
        let y: Vec<u8> = xs.iter().map(|&v| v as u8).collect();
        let spec = BinningSpec {
            feature: "f".into(),
            cuts: Cuts::Numeric(vec![0.5]),
            n_bins: 2,
            missing_bin: None,
            fallback_bin: 0,
            degenerate: false,
        };
        let t = compute_woe(&spec, &numeric(&xs), &y, 0.5).unwrap();
        // (50.5/51) / (0.5/51) = 101
        assert!((t.bins[0].woe - 101f64.ln()).abs() < 1e-12);
        assert!((t.bins[1].woe + 101f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn transform_uses_table_levels_only() {
        let train = Dataset::new(
            vec![Feature::numeric("x", (0..40).map(|i| Some(i as f64)).collect())],
            (0..40).map(|i| ((i * 7) % 3 == 0) as u8).collect(),
            None,
        )
        .unwrap();
        let tables = fit_woe_tables(&train, &BinningConfig::default()).unwrap();
        let levels: Vec<f64> = tables[0].bins.iter().map(|b| b.woe).collect();
        let test = Dataset::new(
            vec![Feature::numeric("x", vec![Some(-100.0), Some(17.5), Some(1e9), None])],
            vec![0, 1, 0, 1],
            None,
        )
        .unwrap();
        let out = woe_transform(&test, &tables, false).unwrap();
        for v in out.column("x").unwrap().as_numeric().unwrap() {
            assert!(levels.contains(&v.unwrap()));
        }
    }

    #[test]
    fn categorical_levels_binned() {
        let levels = ["a", "b", "c", "d"];
        let x = ColumnValues::Categorical((0..200).map(|i| Some(levels[i % 4].to_string())).collect());
        let y: Vec<u8> = (0..200).map(|i| ((i % 4 == 3) || i % 7 == 0) as u8).collect();
        let spec = fit_bins("c", &x, &y, &BinningConfig::default()).unwrap();
        let t = compute_woe(&spec, &x, &y, 0.5).unwrap();
        assert!(t.iv > 0.0);
        assert_eq!(spec.bin_of_level(Some("zzz")), spec.fallback_bin);
    }

    #[test]
    fn monotone_flag_yields_monotone_woe() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        // bad rate wiggles up and down
        let y: Vec<u8> = (0..1000).map(|i| ((i / 100) % 2 == 0 && i % 3 == 0 || i % 5 == 0) as u8).collect();
        let cfg = BinningConfig { monotone: true, ..BinningConfig::default() };
        let spec = fit_bins("w", &numeric(&xs), &y, &cfg).unwrap();
        let t = compute_woe(&spec, &numeric(&xs), &y, 0.5).unwrap();
        let w: Vec<f64> = t.bins.iter().map(|b| b.woe).collect();
        let up = w.windows(2).all(|p| p[1] >= p[0]);
        let down = w.windows(2).all(|p| p[1] <= p[0]);
        assert!(up || down, "{w:?}");
    }

    proptest! {
        #[test]
        fn tables_invariant_and_consistent(
            raw in proptest::collection::vec((-50i32..50, any::<bool>()), 20..300)
        ) {
            let xs: Vec<f64> = raw.iter().map(|r| r.0 as f64).collect();
            let mut y: Vec<u8> = raw.iter().map(|r| r.1 as u8).collect();
            y[0] = 0;
            y[1] = 1;
            let cfg = BinningConfig::default();
            let spec = fit_bins("x", &numeric(&xs), &y, &cfg).unwrap();
            let t = compute_woe(&spec, &numeric(&xs), &y, cfg.smoothing).unwrap();
            prop_assert!(t.iv >= 0.0);
            let sg: f64 = t.bins.iter().map(|b| b.dist_good).sum();
            let sb: f64 = t.bins.iter().map(|b| b.dist_bad).sum();
            prop_assert!((sg - 1.0).abs() < 1e-12 && (sb - 1.0).abs() < 1e-12);
            let rows: usize = t.bins.iter().map(|b| b.n_good + b.n_bad).sum();
            prop_assert_eq!(rows, xs.len());
            let bads: usize = t.bins.iter().map(|b| b.n_bad).sum();
            prop_assert_eq!(bads, y.iter().filter(|&&v| v == 1).count());

            // strictly increasing relabeling keeps the table apart from cut values
            let ys: Vec<f64> = xs.iter().map(|v| (v / 10.0).exp() * 3.0 + 1.0).collect();
            let spec2 = fit_bins("x", &numeric(&ys), &y, &cfg).unwrap();
            let t2 = compute_woe(&spec2, &numeric(&ys), &y, cfg.smoothing).unwrap();
            prop_assert_eq!(&t.bins, &t2.bins);

            let again = compute_woe(&fit_bins("x", &numeric(&xs), &y, &cfg).unwrap(), &numeric(&xs), &y, cfg.smoothing).unwrap();
            prop_assert_eq!(&again, &t);
        }
    }
}
