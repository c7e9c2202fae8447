//! Blind stochastic games, beliefs and the matrix form of belief dynamics.
//!
//! Action pairs `(i, j)` are flattened to a single alphabet with index
//! `i * |J| + j`. A blind MDP is the special case `|J| = 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{check_rows, RowDefect, StochasticMatrix};
use crate::numeric::{Scalar, BELIEF_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionPair {
    pub i: usize,
    pub j: usize,
}

impl ActionPair {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

/// Ordered list of action pairs; histories of a blind game are exactly these.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionSequence(pub Vec<ActionPair>);

impl ActionSequence {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn pairs(&self) -> &[ActionPair] {
        &self.0
    }
}

impl FromIterator<ActionPair> for ActionSequence {
    fn from_iter<T: IntoIterator<Item = ActionPair>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Probability vector over the states of a game.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief<S>(Vec<S>);

impl<S: Scalar> Belief<S> {
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Shape("belief over zero states".into()));
        }
        if let Some(w) = weights.iter().find(|w| w.is_negative()) {
            return Err(Error::Domain(format!("negative belief weight {w}")));
        }
        let total = crate::numeric::sum(&weights);
        if !total.near(&S::one(), BELIEF_TOL) {
            return Err(Error::Domain(format!("belief weights sum to {total}, not 1")));
        }
        Ok(Self(weights))
    }

    pub(crate) fn from_weights_unchecked(mut weights: Vec<S>) -> Self {
        S::renormalize(&mut weights);
        Self(weights)
    }

    pub fn dirac(n: usize, state: usize) -> Self {
        let mut weights = vec![S::zero(); n];
        weights[state] = S::one();
        Self(weights)
    }

    pub fn uniform(n: usize) -> Self {
        let w = S::one() / S::from_usize(n);
        Self(vec![w; n])
    }

    pub fn weights(&self) -> &[S] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_distance(&self, other: &Self) -> S {
        self.0
            .iter()
            .zip(&other.0)
            .fold(S::zero(), |acc, (a, b)| acc + (a.clone() - b.clone()).abs())
    }

    pub fn key(&self) -> Vec<S::Key> {
        self.0.iter().map(Scalar::key).collect()
    }

    pub fn to_f64(&self) -> Belief<f64> {
        Belief(self.0.iter().map(Scalar::to_f64).collect())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.0.iter().map(Scalar::to_json).collect())
    }
}

/// Finite two-player zero-sum blind stochastic game.
#[derive(Clone, Debug, PartialEq)]
pub struct BlindGame<S> {
    states: Vec<String>,
    actions1: Vec<String>,
    actions2: Vec<String>,
    transitions: Vec<StochasticMatrix<S>>,
    rewards: Vec<Vec<S>>,
}

impl<S: Scalar> BlindGame<S> {
    /// `transitions[a]` and `rewards[a]` are indexed by the flattened pair
    /// `a = i * |J| + j`. Validation runs before the game is returned.
    pub fn new(
        states: Vec<String>,
        actions1: Vec<String>,
        actions2: Vec<String>,
        transitions: Vec<Vec<Vec<S>>>,
        rewards: Vec<Vec<S>>,
    ) -> Result<Self> {
        let pairs = actions1.len() * actions2.len();
        if states.is_empty() {
            return Err(Error::Shape("game has no states".into()));
        }
        if actions1.is_empty() || actions2.is_empty() {
            return Err(Error::Shape("both players need at least one action".into()));
        }
        if transitions.len() != pairs || rewards.len() != pairs {
            return Err(Error::Shape(format!(
                "expected {pairs} transition matrices and reward vectors, got {} and {}",
                transitions.len(),
                rewards.len()
            )));
        }
        let k = states.len();
        let pair_name = |a: usize| format!("{}|{}", actions1[a / actions2.len()], actions2[a % actions2.len()]);
        for (a, rows) in transitions.iter().enumerate() {
            if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                return Err(Error::Shape(format!(
                    "transition matrix for {} is not {k}x{k}",
                    pair_name(a)
                )));
            }
            match check_rows(rows) {
                Ok(()) => {}
                Err(RowDefect::Negative { row, col, value }) => {
                    return Err(Error::NegativeEntry {
                        action: pair_name(a),
                        row,
                        col,
                        value,
                    })
                }
                Err(RowDefect::Sum { row, sum }) => {
                    return Err(Error::RowSum {
                        action: pair_name(a),
                        row,
                        sum,
                    })
                }
            }
        }
        for (a, r) in rewards.iter().enumerate() {
            if r.len() != k {
                return Err(Error::Shape(format!(
                    "reward vector for {} has {} entries, expected {k}",
                    pair_name(a),
                    r.len()
                )));
            }
            if let Some((s, v)) = r
                .iter()
                .enumerate()
                .find(|(_, v)| v.is_negative() || **v > S::one())
            {
                return Err(Error::RewardRange {
                    action: pair_name(a),
                    state: states[s].clone(),
                    value: v.to_f64(),
                });
            }
        }
        Ok(Self {
            states,
            actions1,
            actions2,
            transitions: transitions
                .into_iter()
                .map(StochasticMatrix::from_rows_unchecked)
                .collect(),
            rewards,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions1(&self) -> usize {
        self.actions1.len()
    }

    pub fn num_actions2(&self) -> usize {
        self.actions2.len()
    }

    /// Size of the flattened alphabet `I x J`.
    pub fn num_pairs(&self) -> usize {
        self.actions1.len() * self.actions2.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions1(&self) -> &[String] {
        &self.actions1
    }

    pub fn actions2(&self) -> &[String] {
        &self.actions2
    }

    pub fn pair_index(&self, pair: ActionPair) -> Result<usize> {
        if pair.i >= self.actions1.len() || pair.j >= self.actions2.len() {
            return Err(Error::UnknownAction(format!("({}, {})", pair.i, pair.j)));
        }
        Ok(pair.i * self.actions2.len() + pair.j)
    }

    pub fn pair_of(&self, flat: usize) -> ActionPair {
        ActionPair::new(flat / self.actions2.len(), flat % self.actions2.len())
    }

    pub fn pair_name(&self, flat: usize) -> String {
        let p = self.pair_of(flat);
        format!("{}|{}", self.actions1[p.i], self.actions2[p.j])
    }

    pub fn flatten(&self, seq: &ActionSequence) -> Result<Vec<usize>> {
        seq.pairs().iter().map(|p| self.pair_index(*p)).collect()
    }

    pub fn unflatten(&self, flat: &[usize]) -> ActionSequence {
        flat.iter().map(|&a| self.pair_of(a)).collect()
    }

    pub fn transition(&self, flat: usize) -> &StochasticMatrix<S> {
        &self.transitions[flat]
    }

    pub fn transitions(&self) -> &[StochasticMatrix<S>] {
        &self.transitions
    }

    pub fn reward(&self, flat: usize) -> &[S] {
        &self.rewards[flat]
    }

    pub fn product_flat(&self, seq: &[usize]) -> StochasticMatrix<S> {
        let mut acc = StochasticMatrix::identity(self.num_states());
        for &a in seq {
            acc = acc
                .mul(&self.transitions[a])
                .expect("transition matrices share the game's state count");
        }
        acc
    }

    pub fn step_flat(&self, belief: &Belief<S>, flat: usize) -> Belief<S> {
        Belief::from_weights_unchecked(self.transitions[flat].left_apply(belief.weights()))
    }

    pub fn reward_flat(&self, belief: &Belief<S>, flat: usize) -> S {
        belief
            .weights()
            .iter()
            .zip(&self.rewards[flat])
            .fold(S::zero(), |acc, (b, g)| acc + b.clone() * g.clone())
    }

    pub fn check_belief(&self, belief: &Belief<S>) -> Result<()> {
        if belief.len() != self.num_states() {
            return Err(Error::Shape(format!(
                "belief has {} entries, game has {} states",
                belief.len(),
                self.num_states()
            )));
        }
        Ok(())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> BlindGame<T> {
        BlindGame {
            states: self.states.clone(),
            actions1: self.actions1.clone(),
            actions2: self.actions2.clone(),
            transitions: self.transitions.iter().map(|m| m.map(f)).collect(),
            rewards: self
                .rewards
                .iter()
                .map(|r| r.iter().map(f).collect())
                .collect(),
        }
    }

    pub fn to_f64(&self) -> BlindGame<f64> {
        self.map(Scalar::to_f64)
    }
}

impl<S: Scalar> fmt::Display for BlindGame<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "blind game: {} states, {}x{} actions",
            self.num_states(),
            self.num_actions1(),
            self.num_actions2()
        )
    }
}

/// Re-checks every structural invariant of a game.
pub fn validate_game<S: Scalar>(game: &BlindGame<S>) -> Result<()> {
    BlindGame::new(
        game.states.clone(),
        game.actions1.clone(),
        game.actions2.clone(),
        game.transitions.iter().map(StochasticMatrix::to_rows).collect(),
        game.rewards.clone(),
    )
    .map(|_| ())
}

/// `P(a_1) P(a_2) ... P(a_n)`; the empty sequence gives the identity.
pub fn forward_product<S: Scalar>(
    game: &BlindGame<S>,
    seq: &ActionSequence,
) -> Result<StochasticMatrix<S>> {
    Ok(game.product_flat(&game.flatten(seq)?))
}

/// `b' = b^T P(i, j)`.
pub fn belief_step<S: Scalar>(
    game: &BlindGame<S>,
    belief: &Belief<S>,
    pair: ActionPair,
) -> Result<Belief<S>> {
    game.check_belief(belief)?;
    Ok(game.step_flat(belief, game.pair_index(pair)?))
}

/// `sum_k b(k) g(k, i, j)`.
pub fn stage_reward<S: Scalar>(
    game: &BlindGame<S>,
    belief: &Belief<S>,
    pair: ActionPair,
) -> Result<S> {
    game.check_belief(belief)?;
    Ok(game.reward_flat(belief, game.pair_index(pair)?))
}
