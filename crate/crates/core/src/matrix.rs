use crate::error::{Error, Result};
use crate::numeric::{Scalar, STOCHASTIC_TOL};

/// Square row-stochastic matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix<S> {
    n: usize,
    data: Vec<S>,
}

/// Why a row failed the stochasticity check.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum RowDefect {
    Negative { row: usize, col: usize, value: f64 },
    Sum { row: usize, sum: f64 },
}

pub(crate) fn check_rows<S: Scalar>(rows: &[Vec<S>]) -> std::result::Result<(), RowDefect> {
    for (r, row) in rows.iter().enumerate() {
        if let Some((c, v)) = row.iter().enumerate().find(|(_, v)| v.is_negative()) {
            return Err(RowDefect::Negative {
                row: r,
                col: c,
                value: v.to_f64(),
            });
        }
        let total = crate::numeric::sum(row);
        if !total.near(&S::one(), STOCHASTIC_TOL) {
            return Err(RowDefect::Sum {
                row: r,
                sum: total.to_f64(),
            });
        }
    }
    Ok(())
}

impl<S: Scalar> StochasticMatrix<S> {
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Shape("matrix has no rows".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Shape(format!(
                "row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        match check_rows(&rows) {
            Ok(()) => {}
            Err(RowDefect::Negative { row, col, value }) => {
                return Err(Error::NegativeEntry {
                    action: "-".into(),
                    row,
                    col,
                    value,
                })
            }
            Err(RowDefect::Sum { row, sum }) => {
                return Err(Error::RowSum {
                    action: "-".into(),
                    row,
                    sum,
                })
            }
        }
        Ok(Self::from_rows_unchecked(rows))
    }

    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<S>>) -> Self {
        let n = rows.len();
        Self {
            n,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let data = (0..n * n)
            .map(|idx| if idx / n == idx % n { S::one() } else { S::zero() })
            .collect();
        Self { n, data }
    }

    /// Matrix whose every row is `row`.
    pub fn stable_from_row(row: &[S]) -> Self {
        let n = row.len();
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n {
            data.extend(row.iter().cloned());
        }
        Self { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> &S {
        &self.data[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[S] {
        &self.data[row * self.n..(row + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Shape(format!(
                "cannot multiply {0}x{0} by {1}x{1}",
                self.n, other.n
            )));
        }
        let n = self.n;
        let mut data = vec![S::zero(); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = &self.data[r * n + k];
                if a.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let b = &other.data[k * n + c];
                    if !b.is_zero() {
                        data[r * n + c] += a.clone() * b.clone();
                    }
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, weights: &[S]) -> Vec<S> {
        let n = self.n;
        let mut out = vec![S::zero(); n];
        for (k, w) in weights.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            for (c, slot) in out.iter_mut().enumerate() {
                let p = &self.data[k * n + c];
                if !p.is_zero() {
                    *slot += w.clone() * p.clone();
                }
            }
        }
        out
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> StochasticMatrix<T> {
        StochasticMatrix {
            n: self.n,
            data: self.data.iter().map(f).collect(),
        }
    }
}
