//! Value computation on finite perfectly observed games with deterministic
//! transitions: one-shot matrix games, Shapley value iteration, exact
//! mean-cycle values for single-player graphs, and the end-to-end pipeline.

mod approximate;
mod matrix_game;
mod mean_cycle;
mod value_iteration;

pub use approximate::{approximate_uniform_value, SolveMethod, SolverParams, UniformValueReport};
pub use matrix_game::{matrix_game_value, MatrixGame, MatrixGameSolution};
pub use mean_cycle::mean_cycle_value;
pub use value_iteration::{shapley_iterate, stage_operator, SolveResult, ValueIterator};

use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// Game on finitely many states where each action pair moves to exactly one
/// successor. State 0 is the root. `next` and `reward` are indexed by
/// `state * (n1 * n2) + i * n2 + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeterministicGame<S> {
    n_states: usize,
    n1: usize,
    n2: usize,
    next: Vec<usize>,
    reward: Vec<S>,
}

impl<S: Scalar> DeterministicGame<S> {
    pub fn new(n_states: usize, n1: usize, n2: usize, next: Vec<usize>, reward: Vec<S>) -> Result<Self> {
        if n_states == 0 || n1 == 0 || n2 == 0 {
            return Err(Error::DegenerateInput("game needs at least one state and action".into()));
        }
        let edges = n_states * n1 * n2;
        if next.len() != edges || reward.len() != edges {
            return Err(Error::Shape(format!(
                "expected {edges} successors and rewards, got {} and {}",
                next.len(),
                reward.len()
            )));
        }
        if let Some(bad) = next.iter().find(|&&t| t >= n_states) {
            return Err(Error::Shape(format!("successor {bad} is not a state")));
        }
        Ok(Self {
            n_states,
            n1,
            n2,
            next,
            reward,
        })
    }

    pub fn num_states(&self) -> usize {
        self.n_states
    }

    pub fn num_actions1(&self) -> usize {
        self.n1
    }

    pub fn num_actions2(&self) -> usize {
        self.n2
    }

    pub fn num_pairs(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn next(&self, state: usize, pair: usize) -> usize {
        self.next[state * self.num_pairs() + pair]
    }

    pub fn reward(&self, state: usize, pair: usize) -> &S {
        &self.reward[state * self.num_pairs() + pair]
    }

    pub fn successors(&self) -> &[usize] {
        &self.next
    }

    pub fn is_single_player(&self) -> bool {
        self.n1 == 1 || self.n2 == 1
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> DeterministicGame<T> {
        DeterministicGame {
            n_states: self.n_states,
            n1: self.n1,
            n2: self.n2,
            next: self.next.clone(),
            reward: self.reward.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> DeterministicGame<f64> {
        self.map(Scalar::to_f64)
    }
}
