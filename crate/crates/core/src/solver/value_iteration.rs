use rayon::prelude::*;

use super::matrix_game::MatrixGame;
use super::DeterministicGame;
use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// Below this many states a sweep runs sequentially.
const PARALLEL_SWEEP_STATES: usize = 256;

/// `v_N = V_N / N` for every state, where `V_N` is the `N`-stage total value.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult<S> {
    pub values: Vec<S>,
    pub horizon: usize,
    /// `|v_N − v_{⌊N/2⌋}|` at the root; zero when `N = 1`.
    pub residual: S,
    pub root_value: S,
}

/// One backward-induction step: `V'(x) = val_{(i,j)} [r(x,i,j) + V(next(x,i,j))]`.
pub fn stage_operator<S: Scalar>(game: &DeterministicGame<S>, totals: &[S]) -> Result<Vec<S>> {
    let eval = |x: usize| state_value(game, totals, x);
    if game.num_states() >= PARALLEL_SWEEP_STATES {
        (0..game.num_states()).into_par_iter().map(eval).collect()
    } else {
        (0..game.num_states()).map(eval).collect()
    }
}

fn state_value<S: Scalar>(game: &DeterministicGame<S>, totals: &[S], x: usize) -> Result<S> {
    let pairs = game.num_pairs();
    let entries = (0..pairs).map(|a| game.reward(x, a).clone() + totals[game.next(x, a)].clone());
    if game.num_actions2() == 1 {
        return Ok(entries.reduce(S::max_of).expect("at least one action"));
    }
    if game.num_actions1() == 1 {
        return Ok(entries.reduce(S::min_of).expect("at least one action"));
    }
    let m = MatrixGame::from_flat(game.num_actions1(), game.num_actions2(), entries.collect());
    Ok(m.solve()?.value)
}

/// Incremental Shapley iteration holding the current total values.
pub struct ValueIterator<'g, S> {
    game: &'g DeterministicGame<S>,
    totals: Vec<S>,
    horizon: usize,
}

impl<'g, S: Scalar> ValueIterator<'g, S> {
    pub fn new(game: &'g DeterministicGame<S>) -> Self {
        Self {
            game,
            totals: vec![S::zero(); game.num_states()],
            horizon: 0,
        }
    }

    pub fn step(&mut self) -> Result<()> {
        self.totals = stage_operator(self.game, &self.totals)?;
        self.horizon += 1;
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn totals(&self) -> &[S] {
        &self.totals
    }

    /// Average value `V_N(x) / N`.
    pub fn average(&self, x: usize) -> S {
        self.totals[x].clone() / S::from_usize(self.horizon.max(1))
    }

    pub fn averages(&self) -> Vec<S> {
        (0..self.totals.len()).map(|x| self.average(x)).collect()
    }
}

pub fn shapley_iterate<S: Scalar>(game: &DeterministicGame<S>, horizon: usize) -> Result<SolveResult<S>> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let mut it = ValueIterator::new(game);
    let half = horizon / 2;
    let mut half_root = None;
    while it.horizon() < horizon {
        it.step()?;
        if it.horizon() == half {
            half_root = Some(it.average(0));
        }
    }
    let values = it.averages();
    let root_value = values[0].clone();
    let residual = half_root.map_or(S::zero(), |h| (root_value.clone() - h).abs());
    Ok(SolveResult {
        values,
        horizon,
        residual,
        root_value,
    })
}
