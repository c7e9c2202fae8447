//! Ergodicity coefficient, support patterns and the matrix class hierarchy
//! (Markov ⊂ scrambling ⊂ Sarymsakov ⊂ SIA).
//!
//! Sign questions are answered on [`BooleanPattern`]s, so the verdicts are
//! exact in rational mode. In float mode an entry counts as positive when it
//! exceeds [`POSITIVITY_TOL`](crate::numeric::POSITIVITY_TOL).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::StochasticMatrix;
use crate::numeric::{Scalar, BELIEF_TOL};

/// Largest state count a pattern can hold (one `u64` per row).
pub const MAX_PATTERN_STATES: usize = 64;

/// The Sarymsakov test enumerates 3^|K| subset pairs; refuse beyond this.
pub const MAX_SARYMSAKOV_STATES: usize = 16;

/// Subset of states as a bitmask; bit `k` is state `k`.
pub type StateSet = u64;

/// Support of a stochastic matrix: bit `(k, k')` is set iff the entry is positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BooleanPattern {
    n: usize,
    rows: Vec<u64>,
}

impl BooleanPattern {
    pub fn from_rows(n: usize, rows: Vec<u64>) -> Result<Self> {
        if n == 0 || n > MAX_PATTERN_STATES {
            return Err(Error::Shape(format!(
                "patterns support 1..={MAX_PATTERN_STATES} states, got {n}"
            )));
        }
        if rows.len() != n {
            return Err(Error::Shape(format!("{} pattern rows for {n} states", rows.len())));
        }
        let full = full_set(n);
        if rows.iter().any(|r| r & !full != 0) {
            return Err(Error::Shape("pattern row has bits beyond the state count".into()));
        }
        Ok(Self { n, rows })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            rows: (0..n).map(|k| 1u64 << k).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn row(&self, k: usize) -> u64 {
        self.rows[k]
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.rows[row] >> col & 1 == 1
    }

    /// Every pair of rows shares a positive column.
    pub fn is_scrambling(&self) -> bool {
        for a in 0..self.n {
            for b in a + 1..self.n {
                if self.rows[a] & self.rows[b] == 0 {
                    return false;
                }
            }
        }
        true
    }

    /// Some column is positive in every row.
    pub fn is_markov(&self) -> bool {
        self.rows.iter().fold(full_set(self.n), |acc, r| acc & r) != 0
    }

    pub fn is_sarymsakov(&self) -> bool {
        let full = full_set(self.n);
        for q in 1..=full {
            let rest = full & !q;
            let fq = reach_set(self, q);
            let mut q2 = rest;
            while q2 != 0 {
                let fq2 = reach_set(self, q2);
                if fq & fq2 == 0 && (fq | fq2).count_ones() <= (q | q2).count_ones() {
                    return false;
                }
                q2 = (q2 - 1) & rest;
            }
        }
        true
    }

    /// Some power up to the Paz bound is scrambling.
    pub fn is_sia(&self) -> bool {
        let limit = crate::ergodicity::paz_bound(self.n).unwrap_or(u64::MAX).max(1);
        let mut power = self.clone();
        let mut seen = std::collections::HashSet::new();
        let mut step = 1u64;
        loop {
            if power.is_scrambling() {
                return true;
            }
            // powers cycle once a pattern repeats
            if step >= limit || !seen.insert(power.clone()) {
                return false;
            }
            power = pattern_product(&power, self).expect("same size");
            step += 1;
        }
    }
}

fn full_set(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub fn pattern_of<S: Scalar>(m: &StochasticMatrix<S>) -> Result<BooleanPattern> {
    let n = m.size();
    let rows = m
        .rows()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| v.positive_entry())
                .fold(0u64, |acc, (c, _)| acc | 1u64 << c)
        })
        .collect();
    BooleanPattern::from_rows(n, rows)
}

/// Boolean matrix product (OR of ANDs).
pub fn pattern_product(p: &BooleanPattern, q: &BooleanPattern) -> Result<BooleanPattern> {
    if p.n != q.n {
        return Err(Error::Shape(format!("pattern sizes {} and {} differ", p.n, q.n)));
    }
    let rows = p.rows.iter().map(|&r| reach_set(q, r)).collect();
    Ok(BooleanPattern { n: p.n, rows })
}

/// States reachable in one step from `from`.
pub fn reach_set(p: &BooleanPattern, from: StateSet) -> StateSet {
    let mut out = 0u64;
    let mut bits = from & full_set(p.n);
    while bits != 0 {
        let k = bits.trailing_zeros() as usize;
        out |= p.rows[k];
        bits &= bits - 1;
    }
    out
}

/// `½ max_{k,k̄} Σ_{k'} |p_{k,k'} − p_{k̄,k'}|`.
pub fn tau1<S: Scalar>(m: &StochasticMatrix<S>) -> S {
    let n = m.size();
    let mut best = S::zero();
    for a in 0..n {
        for b in a + 1..n {
            let d = m
                .row(a)
                .iter()
                .zip(m.row(b))
                .fold(S::zero(), |acc, (x, y)| acc + (x.clone() - y.clone()).abs());
            if d > best {
                best = d;
            }
        }
    }
    best * S::half()
}

/// All rows equal (exactly, or entrywise within 1e-12 in float mode).
pub fn is_stable<S: Scalar>(m: &StochasticMatrix<S>) -> bool {
    let first = m.row(0);
    m.rows()
        .skip(1)
        .all(|row| row.iter().zip(first).all(|(x, y)| x.near(y, BELIEF_TOL)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MatrixClassReport {
    pub is_markov: bool,
    pub is_scrambling: bool,
    pub is_sarymsakov: bool,
    pub is_sia: bool,
    pub is_stable: bool,
}

pub fn classify<S: Scalar>(m: &StochasticMatrix<S>) -> Result<MatrixClassReport> {
    let p = pattern_of(m)?;
    if p.size() > MAX_SARYMSAKOV_STATES {
        return Err(Error::BudgetExceeded(format!(
            "classification enumerates subset pairs; {} states exceeds the limit of {MAX_SARYMSAKOV_STATES}",
            p.size()
        )));
    }
    Ok(MatrixClassReport {
        is_markov: p.is_markov(),
        is_scrambling: p.is_scrambling(),
        is_sarymsakov: p.is_sarymsakov(),
        is_sia: p.is_sia(),
        is_stable: is_stable(m),
    })
}
