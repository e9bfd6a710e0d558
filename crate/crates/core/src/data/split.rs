use chrono::NaiveDate;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub test_fraction: f64,
    /// Share of the modelling period held out before train/test assignment.
    pub oos_fraction: f64,
    /// Out-of-time window is `(oot_start, oot_end]`.
    pub oot_start: NaiveDate,
    pub oot_end: NaiveDate,
    pub seed: u64,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams {
            test_fraction: 0.3,
            oos_fraction: 0.2,
            oot_start: NaiveDate::from_ymd_opt(2018, 8, 31).unwrap(),
            oot_end: NaiveDate::from_ymd_opt(2018, 11, 30).unwrap(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub out_of_sample: Vec<usize>,
    pub out_of_time: Vec<usize>,
    /// Rows dated after the out-of-time window; they belong to no part.
    pub excluded: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSet {
    pub train: Dataset,
    pub test: Dataset,
    pub out_of_sample: Dataset,
    pub out_of_time: Dataset,
    pub indices: SplitIndices,
}

impl SplitSet {
    pub fn parts(&self) -> [(&'static str, &Dataset); 4] {
        [
            ("train", &self.train),
            ("test", &self.test),
            ("out_of_sample", &self.out_of_sample),
            ("out_of_time", &self.out_of_time),
        ]
    }

    /// Applies the same transformation to every part.
    pub fn map<F>(&self, mut f: F) -> Result<SplitSet>
    where
        F: FnMut(&Dataset) -> Result<Dataset>,
    {
        Ok(SplitSet {
            train: f(&self.train)?,
            test: f(&self.test)?,
            out_of_sample: f(&self.out_of_sample)?,
            out_of_time: f(&self.out_of_time)?,
            indices: self.indices.clone(),
        })
    }
}

const SPLIT_STREAM: u64 = 0x5EED_0001;

pub fn split_indices(dates: &[NaiveDate], params: &SplitParams) -> Result<SplitIndices> {
    if params.oot_start >= params.oot_end {
        return Err(Error::InvalidParameter(format!(
            "oot_start {} must precede oot_end {}",
            params.oot_start, params.oot_end
        )));
    }
    for (name, f) in [("test_fraction", params.test_fraction), ("oos_fraction", params.oos_fraction)] {
        if !(0.0..1.0).contains(&f) {
            return Err(Error::InvalidParameter(format!("{name} = {f} outside [0, 1)")));
        }
    }
    let mut idx = SplitIndices::default();
    let mut modelling = Vec::new();
    for (i, &d) in dates.iter().enumerate() {
        if d <= params.oot_start {
            modelling.push(i);
        } else if d <= params.oot_end {
            idx.out_of_time.push(i);
        } else {
            idx.excluded.push(i);
        }
    }
    let mut rng = rng::stream(params.seed, &[SPLIT_STREAM]);
    modelling.shuffle(&mut rng);
    let n_oos = (params.oos_fraction * modelling.len() as f64).round() as usize;
    let (oos, rest) = modelling.split_at(n_oos);
    let n_test = (params.test_fraction * rest.len() as f64).round() as usize;
    let (test, train) = rest.split_at(n_test);
    idx.out_of_sample = oos.to_vec();
    idx.test = test.to_vec();
    idx.train = train.to_vec();
    for part in [&mut idx.train, &mut idx.test, &mut idx.out_of_sample] {
        part.sort_unstable();
    }
    for (name, part) in [
        ("train", &idx.train),
        ("test", &idx.test),
        ("out_of_sample", &idx.out_of_sample),
        ("out_of_time", &idx.out_of_time),
    ] {
        if part.is_empty() {
            return Err(Error::EmptyPartition(name.to_string()));
        }
    }
    Ok(idx)
}

pub fn temporal_split(d: &Dataset, params: &SplitParams) -> Result<SplitSet> {
    let dates = d.dates().ok_or(Error::MissingDate)?;
    let indices = split_indices(dates, params)?;
    Ok(SplitSet {
        train: d.select_rows(&indices.train),
        test: d.select_rows(&indices.test),
        out_of_sample: d.select_rows(&indices.out_of_sample),
        out_of_time: d.select_rows(&indices.out_of_time),
        indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Feature;
    use proptest::prelude::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn dated(dates: Vec<NaiveDate>) -> Dataset {
        let n = dates.len();
        Dataset::new(
            vec![Feature::numeric("x", (0..n).map(|i| Some(i as f64)).collect())],
            (0..n).map(|i| (i % 2) as u8).collect(),
            Some(dates),
        )
        .unwrap()
    }

    #[test]
    fn september_row_is_out_of_time() {
        let mut dates: Vec<NaiveDate> = (0..40).map(|i| date(2018, 1, 1) + chrono::Days::new(i)).collect();
        dates.push(date(2018, 9, 15));
        let s = temporal_split(&dated(dates), &SplitParams::default()).unwrap();
        assert_eq!(s.indices.out_of_time, vec![40]);
    }

    #[test]
    fn window_boundaries() {
        let p = SplitParams::default();
        let dates = vec![date(2018, 8, 31), date(2018, 9, 1), date(2018, 11, 30), date(2018, 12, 1)];
        let mut all = dates.clone();
        all.extend((0..20).map(|i| date(2018, 1, 1) + chrono::Days::new(i)));
        let idx = split_indices(&all, &p).unwrap();
        assert_eq!(idx.out_of_time, vec![1, 2]);
        assert_eq!(idx.excluded, vec![3]);
        assert!(!idx.out_of_time.contains(&0));
    }

    #[test]
    fn all_rows_in_window_empties_train() {
        let dates = vec![date(2018, 9, 10); 10];
        let err = temporal_split(&dated(dates), &SplitParams::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyPartition(p) if p == "train"));
    }

    #[test]
    fn same_seed_same_split() {
        let dates: Vec<NaiveDate> = (0..300).map(|i| date(2017, 10, 1) + chrono::Days::new(i * 2)).collect();
        let d = dated(dates);
        let a = temporal_split(&d, &SplitParams::default()).unwrap();
        let b = temporal_split(&d, &SplitParams::default()).unwrap();
        assert_eq!(a, b);
        let c = temporal_split(&d, &SplitParams { seed: 7, ..SplitParams::default() }).unwrap();
        assert_ne!(a.indices.train, c.indices.train);
    }

    proptest! {
        #[test]
        fn parts_partition_rows(offsets in proptest::collection::vec(0u64..500, 30..200), seed in 0u64..1000) {
            let dates: Vec<NaiveDate> = offsets.iter().map(|&o| date(2017, 10, 1) + chrono::Days::new(o)).collect();
            let params = SplitParams { seed, ..SplitParams::default() };
            if let Ok(idx) = split_indices(&dates, &params) {
                let mut all: Vec<usize> = idx.train.iter()
                    .chain(&idx.test).chain(&idx.out_of_sample).chain(&idx.out_of_time).chain(&idx.excluded)
                    .copied().collect();
                let total = all.len();
                all.sort_unstable();
                all.dedup();
                prop_assert_eq!(all.len(), total);
                prop_assert_eq!(total, dates.len());
                let latest_in = idx.train.iter().chain(&idx.test).chain(&idx.out_of_sample)
                    .map(|&i| dates[i]).max().unwrap();
                for &i in &idx.out_of_time {
                    prop_assert!(dates[i] > latest_in);
                }
            }
        }
    }
}
