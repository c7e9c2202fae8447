//! One-shot zero-sum matrix games solved by the simplex method.
//!
//! After shifting the payoffs to be strictly positive, the column player's
//! problem becomes `max 1ᵀy  s.t.  A y ≤ 1, y ≥ 0`. Its optimum `z` gives the
//! shifted value `1/z`; the row player's strategy is read off the dual prices
//! of the slack columns. Entering and leaving variables follow Bland's rule.

use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// Payoff matrix; the row player maximizes.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGame<S> {
    rows: usize,
    cols: usize,
    payoffs: Vec<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGameSolution<S> {
    pub value: S,
    pub row_strategy: Vec<S>,
    pub col_strategy: Vec<S>,
}

impl<S: Scalar> MatrixGame<S> {
    pub fn new(payoffs: Vec<Vec<S>>) -> Result<Self> {
        let rows = payoffs.len();
        let cols = payoffs.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::DegenerateInput("matrix game with no rows or columns".into()));
        }
        if payoffs.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged payoff matrix".into()));
        }
        Ok(Self {
            rows,
            cols,
            payoffs: payoffs.into_iter().flatten().collect(),
        })
    }

    pub(crate) fn from_flat(rows: usize, cols: usize, payoffs: Vec<S>) -> Self {
        debug_assert_eq!(payoffs.len(), rows * cols);
        Self { rows, cols, payoffs }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.payoffs[i * self.cols + j]
    }

    /// `min_j σᵀA e_j`.
    pub fn row_guarantee(&self, sigma: &[S]) -> S {
        (0..self.cols)
            .map(|j| {
                (0..self.rows).fold(S::zero(), |acc, i| acc + sigma[i].clone() * self.get(i, j).clone())
            })
            .reduce(S::min_of)
            .expect("nonempty")
    }

    /// `max_i e_iᵀA π`.
    pub fn col_guarantee(&self, pi: &[S]) -> S {
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(S::zero(), |acc, j| acc + pi[j].clone() * self.get(i, j).clone())
            })
            .reduce(S::max_of)
            .expect("nonempty")
    }

    pub fn solve(&self) -> Result<MatrixGameSolution<S>> {
        if let Some(sol) = self.saddle_point() {
            return Ok(sol);
        }
        self.simplex()
    }

    fn pure(&self, i: usize, j: usize) -> MatrixGameSolution<S> {
        let mut sigma = vec![S::zero(); self.rows];
        let mut pi = vec![S::zero(); self.cols];
        sigma[i] = S::one();
        pi[j] = S::one();
        MatrixGameSolution {
            value: self.get(i, j).clone(),
            row_strategy: sigma,
            col_strategy: pi,
        }
    }

    /// Pure equilibrium when the maximin equals the minimax; lowest indices win ties.
    fn saddle_point(&self) -> Option<MatrixGameSolution<S>> {
        let mut best_row = 0;
        let mut maximin: Option<S> = None;
        for i in 0..self.rows {
            let m = (0..self.cols).map(|j| self.get(i, j).clone()).reduce(S::min_of)?;
            if maximin.as_ref().is_none_or(|b| m > *b) {
                maximin = Some(m);
                best_row = i;
            }
        }
        let mut best_col = 0;
        let mut minimax: Option<S> = None;
        for j in 0..self.cols {
            let m = (0..self.rows).map(|i| self.get(i, j).clone()).reduce(S::max_of)?;
            if minimax.as_ref().is_none_or(|b| m < *b) {
                minimax = Some(m);
                best_col = j;
            }
        }
        (maximin? == minimax?).then(|| self.pure(best_row, best_col))
    }

    fn simplex(&self) -> Result<MatrixGameSolution<S>> {
        let (m, n) = (self.rows, self.cols);
        let low = self.payoffs.iter().cloned().reduce(S::min_of).expect("nonempty");
        let shift = S::one() - low;
        // columns: y_0..y_{n-1}, slack_0..slack_{m-1}, rhs
        let width = n + m + 1;
        let mut tab = vec![S::zero(); m * width];
        for i in 0..m {
            for j in 0..n {
                tab[i * width + j] = self.get(i, j).clone() + shift.clone();
            }
            tab[i * width + n + i] = S::one();
            tab[i * width + n + m] = S::one();
        }
        // reduced costs of the maximization objective
        let mut obj = vec![S::zero(); width];
        for c in obj.iter_mut().take(n) {
            *c = S::one();
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        let cap = 64 * (m + n) + 1024;
        let mut iterations = 0;
        while let Some(enter) = (0..n + m).find(|&c| obj[c].positive_entry()) {
            iterations += 1;
            if iterations > cap {
                return Err(Error::BudgetExceeded(format!(
                    "simplex exceeded {cap} pivots on a {m}x{n} game"
                )));
            }
            let mut leave: Option<(usize, S)> = None;
            for r in 0..m {
                let coef = &tab[r * width + enter];
                if !coef.positive_entry() {
                    continue;
                }
                let ratio = tab[r * width + n + m].clone() / coef.clone();
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            // the feasible region is bounded since every shifted entry is positive
            let (r, _) = leave.ok_or_else(|| Error::DegenerateInput("unbounded value program".into()))?;
            let pivot = tab[r * width + enter].clone();
            for c in 0..width {
                tab[r * width + c] /= pivot.clone();
            }
            for other in 0..m {
                if other == r {
                    continue;
                }
                let factor = tab[other * width + enter].clone();
                if factor.is_zero() {
                    continue;
                }
                for c in 0..width {
                    let delta = factor.clone() * tab[r * width + c].clone();
                    tab[other * width + c] -= delta;
                }
            }
            let factor = obj[enter].clone();
            for c in 0..width {
                let delta = factor.clone() * tab[r * width + c].clone();
                obj[c] -= delta;
            }
            basis[r] = enter;
        }
        let mut y = vec![S::zero(); n];
        for (r, &var) in basis.iter().enumerate() {
            if var < n {
                y[var] = tab[r * width + n + m].clone();
            }
        }
        let z = crate::numeric::sum(&y);
        if !z.positive_entry() {
            return Err(Error::DegenerateInput("value program has zero optimum".into()));
        }
        let scaled = S::one() / z.clone();
        let mut x: Vec<S> = (0..m).map(|i| S::max_of(-obj[n + i].clone(), S::zero())).collect();
        let mut pi: Vec<S> = y.into_iter().map(|v| v * scaled.clone()).collect();
        for v in x.iter_mut() {
            *v *= scaled.clone();
        }
        S::renormalize(&mut x);
        S::renormalize(&mut pi);
        Ok(MatrixGameSolution {
            value: scaled - shift,
            row_strategy: x,
            col_strategy: pi,
        })
    }
}

/// Value and optimal mixed strategies of a payoff matrix (row player maximizes).
pub fn matrix_game_value<S: Scalar>(payoffs: &[Vec<S>]) -> Result<MatrixGameSolution<S>> {
    MatrixGame::new(payoffs.to_vec())?.solve()
}
