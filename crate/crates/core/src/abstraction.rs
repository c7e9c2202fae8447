//! Finite abstraction of the belief game.
//!
//! Products of `n = n_ε` transition matrices are replaced by their stable
//! approximation (every row set to the column means). Abstract states are a
//! base belief together with the actions played since the last block
//! boundary. At each boundary the play jumps to the common row of the
//! stable approximation of the block just completed, so only finitely many
//! base beliefs ever occur.

use std::collections::HashMap;

use indexmap::IndexSet;
use serde_json::json;

use crate::budget::Budget;
use crate::ergodicity::{n_epsilon, ErgodicityCertificate};
use crate::error::{Error, Result};
use crate::game::{Belief, BlindGame};
use crate::matrix::StochasticMatrix;
use crate::numeric::Scalar;
use crate::solver::DeterministicGame;

/// Stable matrix whose common row is the column-mean row of `m`.
pub fn stable_approximation<S: Scalar>(m: &StochasticMatrix<S>) -> StochasticMatrix<S> {
    let n = m.size();
    let count = S::from_usize(n);
    let means: Vec<S> = (0..n)
        .map(|c| m.rows().fold(S::zero(), |acc, row| acc + row[c].clone()) / count.clone())
        .collect();
    StochasticMatrix::stable_from_row(&means)
}

/// Length-`n` products and their stable approximations, materialized on demand.
#[derive(Clone, Debug)]
pub struct StableMatrixFamily<S> {
    eps: S,
    n: usize,
    entries: HashMap<Vec<usize>, (StochasticMatrix<S>, StochasticMatrix<S>)>,
    complete: bool,
}

impl<S: Scalar> StableMatrixFamily<S> {
    pub fn lazy(eps: S, n: usize) -> Self {
        Self {
            eps,
            n,
            entries: HashMap::new(),
            complete: false,
        }
    }

    /// Materializes all `|A|^n` entries.
    pub fn enumerate(game: &BlindGame<S>, eps: S, n: usize, budget: &Budget) -> Result<Self> {
        budget.check_sequences(game.num_pairs(), n, "stable matrix family")?;
        let mut family = Self::lazy(eps, n);
        let mut seq = vec![0usize; n];
        loop {
            family.entry(game, &seq);
            if !next_word(&mut seq, game.num_pairs()) {
                break;
            }
        }
        family.complete = true;
        Ok(family)
    }

    pub fn eps(&self) -> &S {
        &self.eps
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    /// True once every sequence of length `n` is stored.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(Tⁿ, T̃ⁿ)` for a flattened sequence of length `n`.
    pub fn entry(&mut self, game: &BlindGame<S>, seq: &[usize]) -> &(StochasticMatrix<S>, StochasticMatrix<S>) {
        debug_assert_eq!(seq.len(), self.n);
        self.entries.entry(seq.to_vec()).or_insert_with(|| {
            let product = game.product_flat(seq);
            let stable = stable_approximation(&product);
            (product, stable)
        })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &(StochasticMatrix<S>, StochasticMatrix<S>))> {
        self.entries.iter()
    }
}

/// Advances `word` to its lexicographic successor over `base` letters.
pub(crate) fn next_word(word: &mut [usize], base: usize) -> bool {
    for slot in word.iter_mut().rev() {
        *slot += 1;
        if *slot < base {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Base belief (index into the abstract belief list) and the flattened
/// actions played since the last block boundary.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbstractState {
    pub base: usize,
    pub prefix: Vec<usize>,
}

impl AbstractState {
    pub fn root(base: usize) -> Self {
        Self {
            base,
            prefix: Vec::new(),
        }
    }
}

/// Abstract state dynamics over a fixed game and block length.
pub struct AbstractDynamics<'g, S: Scalar> {
    game: &'g BlindGame<S>,
    n: usize,
    /// block sequence -> index of its stable row
    jumps: HashMap<Vec<usize>, usize>,
    keys: IndexSet<Vec<S::Key>>,
    beliefs: Vec<Belief<S>>,
    uniform: Belief<S>,
}

impl<'g, S: Scalar> AbstractDynamics<'g, S> {
    pub fn new(game: &'g BlindGame<S>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("block length must be at least 1".into()));
        }
        Ok(Self {
            game,
            n,
            jumps: HashMap::new(),
            keys: IndexSet::new(),
            beliefs: Vec::new(),
            uniform: Belief::uniform(game.num_states()),
        })
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn beliefs(&self) -> &[Belief<S>] {
        &self.beliefs
    }

    pub fn belief(&self, index: usize) -> &Belief<S> {
        &self.beliefs[index]
    }

    /// Index of `belief`, adding it if no equal (or, in float mode,
    /// equally keyed) belief is known.
    pub fn intern(&mut self, belief: Belief<S>) -> usize {
        let (idx, fresh) = self.keys.insert_full(belief.key());
        if fresh {
            self.beliefs.push(belief);
        }
        idx
    }

    pub fn root(&mut self, b1: &Belief<S>) -> Result<AbstractState> {
        self.game.check_belief(b1)?;
        Ok(AbstractState::root(self.intern(b1.clone())))
    }

    /// Common row of the stable approximation of a length-`n` block.
    pub fn block_row(&self, seq: &[usize]) -> Belief<S> {
        // column means of Tⁿ equal the uniform belief pushed through the block
        seq.iter()
            .fold(self.uniform.clone(), |b, &a| self.game.step_flat(&b, a))
    }

    /// Index of the block row, interned.
    pub fn jump(&mut self, seq: &[usize]) -> usize {
        if let Some(&idx) = self.jumps.get(seq) {
            return idx;
        }
        let idx = self.intern(self.block_row(seq));
        self.jumps.insert(seq.to_vec(), idx);
        idx
    }

    pub fn update(&mut self, x: &AbstractState, pair: usize) -> AbstractState {
        let n = self.block_length();
        let mut prefix = x.prefix.clone();
        prefix.push(pair);
        if prefix.len() < n {
            return AbstractState {
                base: x.base,
                prefix,
            };
        }
        AbstractState::root(self.jump(&prefix))
    }

    /// Base belief pushed through the prefix.
    pub fn proj(&self, x: &AbstractState) -> Belief<S> {
        x.prefix
            .iter()
            .fold(self.beliefs[x.base].clone(), |b, &a| self.game.step_flat(&b, a))
    }
}

/// `{b1} ∪ {common row of T̃ⁿ(s) : |s| = n}`, deduplicated; `b1` comes first.
pub fn abstract_belief_set<S: Scalar>(
    game: &BlindGame<S>,
    b1: &Belief<S>,
    eps: &S,
    cert: &ErgodicityCertificate<S>,
    budget: &Budget,
) -> Result<Vec<Belief<S>>> {
    let n = n_epsilon(cert, eps)?;
    budget.check_sequences(game.num_pairs(), n, "abstract belief set")?;
    let mut dynamics = AbstractDynamics::new(game, n)?;
    dynamics.root(b1)?;
    let mut seq = vec![0usize; n];
    loop {
        dynamics.jump(&seq);
        if !next_word(&mut seq, game.num_pairs()) {
            break;
        }
    }
    Ok(dynamics.beliefs)
}

/// Reachable part of the abstract game, rooted at state 0.
#[derive(Clone, Debug)]
pub struct AbstractGame<S> {
    pub eps: S,
    pub n_eps: usize,
    pub beliefs: Vec<Belief<S>>,
    pub states: Vec<AbstractState>,
    /// `proj` of each state.
    pub projections: Vec<Belief<S>>,
    pub dynamics: DeterministicGame<S>,
    pub actions1: Vec<String>,
    pub actions2: Vec<String>,
}

impl<S: Scalar> AbstractGame<S> {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_beliefs(&self) -> usize {
        self.beliefs.len()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn to_json(&self) -> serde_json::Value {
        let n2 = self.actions2.len();
        let label = |x: &AbstractState| {
            let prefix: Vec<String> = x
                .prefix
                .iter()
                .map(|&a| format!("{}|{}", self.actions1[a / n2], self.actions2[a % n2]))
                .collect();
            json!({"base": x.base, "prefix": prefix})
        };
        let states: Vec<_> = self
            .states
            .iter()
            .zip(&self.projections)
            .enumerate()
            .map(|(id, (x, p))| {
                let mut v = label(x);
                v["id"] = json!(id);
                v["belief"] = p.to_json();
                v
            })
            .collect();
        let mut edges = Vec::new();
        for x in 0..self.num_states() {
            for a in 0..self.dynamics.num_pairs() {
                edges.push(json!({
                    "from": x,
                    "i": self.actions1[a / n2],
                    "j": self.actions2[a % n2],
                    "to": self.dynamics.next(x, a),
                    "reward": self.dynamics.reward(x, a).to_json(),
                }));
            }
        }
        json!({
            "n_eps": self.n_eps,
            "num_states": self.num_states(),
            "num_beliefs": self.num_beliefs(),
            "beliefs": self.beliefs.iter().map(Belief::to_json).collect::<Vec<_>>(),
            "states": states,
            "edges": edges,
        })
    }
}

/// Breadth-first closure of the abstract dynamics from `(b1, [])`.
pub fn build_abstract_game<S: Scalar>(
    game: &BlindGame<S>,
    b1: &Belief<S>,
    eps: &S,
    cert: &ErgodicityCertificate<S>,
    budget: &Budget,
) -> Result<AbstractGame<S>> {
    let n = n_epsilon(cert, eps)?;
    build_with_block_length(game, b1, eps, n, budget)
}

/// Closure for an explicit block length.
pub fn build_with_block_length<S: Scalar>(
    game: &BlindGame<S>,
    b1: &Belief<S>,
    eps: &S,
    n: usize,
    budget: &Budget,
) -> Result<AbstractGame<S>> {
    let clock = budget.clock();
    let pairs = game.num_pairs();
    let mut dynamics = AbstractDynamics::new(game, n)?;
    let root = dynamics.root(b1)?;
    let mut states: IndexSet<AbstractState> = IndexSet::new();
    let mut projections = vec![b1.clone()];
    states.insert(root);
    let mut next = Vec::new();
    let mut reward = Vec::new();
    let mut cursor = 0;
    while cursor < states.len() {
        if cursor % 1024 == 0 {
            clock.check("abstract game construction")?;
        }
        let x = states[cursor].clone();
        let here = projections[cursor].clone();
        for a in 0..pairs {
            reward.push(game.reward_flat(&here, a));
            let y = dynamics.update(&x, a);
            let appended = !y.prefix.is_empty();
            let (idx, fresh) = states.insert_full(y);
            if fresh {
                if states.len() > budget.max_states {
                    return Err(Error::BudgetExceeded(format!(
                        "abstract game exceeds {} states (block length {n})",
                        budget.max_states
                    )));
                }
                projections.push(if appended {
                    game.step_flat(&here, a)
                } else {
                    dynamics.belief(states[idx].base).clone()
                });
            }
            next.push(idx);
        }
        cursor += 1;
    }
    let n_states = states.len();
    Ok(AbstractGame {
        eps: eps.clone(),
        n_eps: n,
        beliefs: dynamics.beliefs,
        states: states.into_iter().collect(),
        projections,
        dynamics: DeterministicGame::new(n_states, game.num_actions1(), game.num_actions2(), next, reward)?,
        actions1: game.actions1().to_vec(),
        actions2: game.actions2().to_vec(),
    })
}
