use super::dataset::{ColumnValues, Dataset};
use crate::error::{Error, Result};

/// Dense row-major numeric design matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    names: Vec<String>,
    data: Vec<f64>,
    n_rows: usize,
}

impl Matrix {
    pub fn new(names: Vec<String>, data: Vec<f64>, n_rows: usize) -> Result<Self> {
        if data.len() != n_rows * names.len() {
            return Err(Error::LengthMismatch(format!(
                "{} values for {} x {} matrix",
                data.len(),
                n_rows,
                names.len()
            )));
        }
        Ok(Matrix { names, data, n_rows })
    }

    pub fn from_columns(names: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        let n_rows = columns.first().map_or(0, |c| c.len());
        if names.len() != columns.len() || columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::LengthMismatch("ragged columns".into()));
        }
        let mut data = Vec::with_capacity(n_rows * columns.len());
        for i in 0..n_rows {
            data.extend(columns.iter().map(|c| c[i]));
        }
        Ok(Matrix { names, data, n_rows })
    }

    /// Numeric design matrix from a fully imputed, fully numeric dataset.
    pub fn from_dataset(d: &Dataset) -> Result<Self> {
        let mut columns = Vec::with_capacity(d.columns().len());
        for c in d.columns() {
            match &c.values {
                ColumnValues::Numeric(v) => columns.push(
                    v.iter()
                        .map(|x| x.ok_or_else(|| Error::MissingValues(c.name.clone())))
                        .collect::<Result<Vec<f64>>>()?,
                ),
                ColumnValues::Categorical(_) => {
                    return Err(Error::InvalidParameter(format!(
                        "column '{}' is categorical; encode it first",
                        c.name
                    )))
                }
            }
        }
        let mut m = Matrix::from_columns(d.column_names(), &columns)?;
        // a zero-column matrix still has rows
        m.n_rows = d.n_rows();
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn col_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.data[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let p = self.n_cols();
        self.data[i * p + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self.set(i, j, *v);
        }
    }

    /// Sets column `j` to `v` in every row.
    pub fn fill_column(&mut self, j: usize, v: f64) {
        for i in 0..self.n_rows {
            self.set(i, j, v);
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols());
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            names: self.names.clone(),
            data,
            n_rows: rows.len(),
        }
    }

    pub fn select_columns(&self, names: &[String]) -> Result<Matrix> {
        let idx = names
            .iter()
            .map(|n| self.col_index(n).ok_or_else(|| Error::UnknownColumn(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        let mut data = Vec::with_capacity(self.n_rows * idx.len());
        for r in self.rows() {
            data.extend(idx.iter().map(|&j| r[j]));
        }
        Ok(Matrix {
            names: names.to_vec(),
            data,
            n_rows: self.n_rows,
        })
    }

    /// Single-row matrix.
    pub fn from_row(names: Vec<String>, row: Vec<f64>) -> Result<Matrix> {
        Matrix::new(names, row, 1)
    }

    /// `n` copies of one row.
    pub fn repeat_row(names: &[String], row: &[f64], n: usize) -> Matrix {
        let mut data = Vec::with_capacity(n * row.len());
        for _ in 0..n {
            data.extend_from_slice(row);
        }
        Matrix {
            names: names.to_vec(),
            data,
            n_rows: n,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Order-sensitive 64-bit fingerprint of names and values.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |b: u64| {
            h ^= b;
            h = h.wrapping_mul(0x0100_0000_01b3);
        };
        for n in &self.names {
            for b in n.bytes() {
                eat(b as u64);
            }
        }
        for v in &self.data {
            eat(v.to_bits());
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Feature;

    #[test]
    fn from_dataset_requires_complete_numeric() {
        let d = Dataset::new(
            vec![
                Feature::numeric("a", vec![Some(1.0), Some(2.0)]),
                Feature::numeric("b", vec![Some(3.0), Some(4.0)]),
            ],
            vec![0, 1],
            None,
        )
        .unwrap();
        let m = Matrix::from_dataset(&d).unwrap();
        assert_eq!(m.row(1), &[2.0, 4.0]);
        let gap = Dataset::new(vec![Feature::numeric("a", vec![None])], vec![0], None).unwrap();
        assert!(matches!(Matrix::from_dataset(&gap), Err(Error::MissingValues(_))));
    }

    #[test]
    fn column_selection_by_name() {
        let m = Matrix::new(vec!["a".into(), "b".into()], vec![1.0, 2.0, 3.0, 4.0], 2).unwrap();
        let s = m.select_columns(&["b".into()]).unwrap();
        assert_eq!(s.as_slice(), &[2.0, 4.0]);
        assert!(m.select_columns(&["c".into()]).is_err());
    }
}
