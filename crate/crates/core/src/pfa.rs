//! Probabilistic finite automata and their reduction to Markov blind MDPs.
//!
//! The reduction adds a sink reached with probability `θ` on every symbol
//! and a `Restart` action that returns all mass to the initial state and
//! pays 1 on accepting states, 0 on other states and 1/2 at the sink. Every
//! other stage pays 1/2. Playing a word followed by `Restart` forever earns
//! more than 1/2 on average iff the word is accepted with probability above
//! 1/2.

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::game::{Belief, BlindGame};
use crate::matrix::StochasticMatrix;
use crate::numeric::{powi, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Pfa<S> {
    states: Vec<String>,
    symbols: Vec<String>,
    transitions: Vec<StochasticMatrix<S>>,
    accepting: Vec<usize>,
    initial: usize,
}

impl<S: Scalar> Pfa<S> {
    /// `transitions[i]` is the row-stochastic matrix of symbol `i`.
    pub fn new(
        states: Vec<String>,
        symbols: Vec<String>,
        transitions: Vec<Vec<Vec<S>>>,
        accepting: Vec<usize>,
        initial: usize,
    ) -> Result<Self> {
        let k = states.len();
        if k == 0 {
            return Err(Error::Shape("automaton has no states".into()));
        }
        if symbols.is_empty() {
            return Err(Error::Shape("automaton has no symbols".into()));
        }
        if transitions.len() != symbols.len() {
            return Err(Error::Shape(format!(
                "{} transition matrices for {} symbols",
                transitions.len(),
                symbols.len()
            )));
        }
        if initial >= k {
            return Err(Error::Shape(format!("initial state {initial} out of range")));
        }
        let mut accepting = accepting;
        accepting.sort_unstable();
        accepting.dedup();
        if let Some(bad) = accepting.iter().find(|&&b| b >= k) {
            return Err(Error::Shape(format!("accepting state {bad} out of range")));
        }
        let mut matrices = Vec::with_capacity(symbols.len());
        for (i, rows) in transitions.into_iter().enumerate() {
            if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                return Err(Error::Shape(format!("transition matrix for {} is not {k}x{k}", symbols[i])));
            }
            let m = StochasticMatrix::new(rows).map_err(|e| match e {
                Error::RowSum { row, sum, .. } => Error::RowSum {
                    action: symbols[i].clone(),
                    row,
                    sum,
                },
                Error::NegativeEntry { row, col, value, .. } => Error::NegativeEntry {
                    action: symbols[i].clone(),
                    row,
                    col,
                    value,
                },
                other => other,
            })?;
            matrices.push(m);
        }
        for &b in &accepting {
            if matrices.iter().all(|m| *m.get(b, b) == S::one()) {
                return Err(Error::AbsorbingAccepting(states[b].clone()));
            }
        }
        Ok(Self {
            states,
            symbols,
            transitions: matrices,
            accepting,
            initial,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn transition(&self, symbol: usize) -> &StochasticMatrix<S> {
        &self.transitions[symbol]
    }

    pub fn accepting(&self) -> &[usize] {
        &self.accepting
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting.binary_search(&state).is_ok()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn symbol_index(&self, name: &str) -> Result<usize> {
        self.symbols
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> Pfa<T> {
        Pfa {
            states: self.states.clone(),
            symbols: self.symbols.clone(),
            transitions: self.transitions.iter().map(|m| m.map(f)).collect(),
            accepting: self.accepting.clone(),
            initial: self.initial,
        }
    }

    fn accepted_mass(&self, dist: &[S]) -> S {
        self.accepting
            .iter()
            .fold(S::zero(), |acc, &b| acc + dist[b].clone())
    }

    fn check_word(&self, word: &[usize]) -> Result<()> {
        match word.iter().find(|&&i| i >= self.symbols.len()) {
            Some(bad) => Err(Error::UnknownSymbol(format!("#{bad}"))),
            None => Ok(()),
        }
    }
}

/// Mass on accepting states after reading `word` from the initial state.
pub fn acceptance_probability<S: Scalar>(pfa: &Pfa<S>, word: &[usize]) -> Result<S> {
    pfa.check_word(word)?;
    let start = Belief::<S>::dirac(pfa.num_states(), pfa.initial);
    let dist = word
        .iter()
        .fold(start.weights().to_vec(), |d, &i| pfa.transitions[i].left_apply(&d));
    Ok(pfa.accepted_mass(&dist))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionParams<S> {
    /// Probability of falling into the sink on each symbol, in `(0, 1)`.
    pub theta: S,
}

impl<S: Scalar> ReductionParams<S> {
    pub fn new(theta: S) -> Result<Self> {
        if !(theta.is_positive() && theta < S::one()) {
            return Err(Error::Domain(format!("theta must lie in (0, 1), got {theta}")));
        }
        Ok(Self { theta })
    }
}

impl<S: Scalar> Default for ReductionParams<S> {
    fn default() -> Self {
        Self { theta: S::half() }
    }
}

/// Blind MDP produced by the reduction, with its distinguished indices.
#[derive(Clone, Debug)]
pub struct ReducedGame<S> {
    pub game: BlindGame<S>,
    pub initial: Belief<S>,
    pub sink: usize,
    pub restart: usize,
}

pub fn reduce_to_blind_mdp<S: Scalar>(pfa: &Pfa<S>, params: &ReductionParams<S>) -> Result<ReducedGame<S>> {
    let params = ReductionParams::new(params.theta.clone())?;
    let theta = params.theta;
    let k = pfa.num_states();
    let sink = k;
    let mut states = pfa.states.clone();
    states.push(fresh_name(&pfa.states, "sink"));
    let mut actions = pfa.symbols.clone();
    actions.push(fresh_name(&pfa.symbols, "Restart"));
    let keep = S::one() - theta.clone();
    let half = S::half();

    let mut transitions = Vec::with_capacity(actions.len());
    let mut rewards = Vec::with_capacity(actions.len());
    for m in &pfa.transitions {
        let mut rows = Vec::with_capacity(k + 1);
        for s in 0..k {
            let mut row: Vec<S> = m.row(s).iter().map(|p| p.clone() * keep.clone()).collect();
            row.push(theta.clone());
            rows.push(row);
        }
        let mut absorbed = vec![S::zero(); k + 1];
        absorbed[sink] = S::one();
        rows.push(absorbed);
        transitions.push(rows);
        rewards.push(vec![half.clone(); k + 1]);
    }
    let mut restart_row = vec![S::zero(); k + 1];
    restart_row[pfa.initial] = S::one();
    transitions.push(vec![restart_row; k + 1]);
    let mut restart_reward: Vec<S> = (0..k)
        .map(|s| if pfa.is_accepting(s) { S::one() } else { S::zero() })
        .collect();
    restart_reward.push(half);
    rewards.push(restart_reward);

    let restart = actions.len() - 1;
    let game = BlindGame::new(states, actions, vec!["*".into()], transitions, rewards)?;
    Ok(ReducedGame {
        game,
        initial: Belief::dirac(k + 1, pfa.initial),
        sink,
        restart,
    })
}

fn fresh_name(taken: &[String], base: &str) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

/// Expected average reward over one block `(word, Restart)` of the reduced game:
/// `[N/2 + (1 − (1−θ)^N)/2 + (1−θ)^N · acceptance] / (N + 1)`.
pub fn cyclic_block_payoff<S: Scalar>(pfa: &Pfa<S>, params: &ReductionParams<S>, word: &[usize]) -> Result<S> {
    if word.is_empty() {
        return Err(Error::Domain("block payoff needs a nonempty word".into()));
    }
    let params = ReductionParams::new(params.theta.clone())?;
    let acc = acceptance_probability(pfa, word)?;
    let n = word.len();
    let survive = powi(&(S::one() - params.theta), n);
    let half = S::half();
    let total = S::from_usize(n) * half.clone() + (S::one() - survive.clone()) * half + survive * acc;
    Ok(total / S::from_usize(n + 1))
}

/// First word in length-lexicographic order, of length at most `max_len`,
/// accepted with probability strictly above 1/2.
pub fn exists_word_above_half<S: Scalar>(pfa: &Pfa<S>, max_len: usize, budget: &Budget) -> Result<Option<Vec<usize>>> {
    let half = S::half();
    let start = Belief::<S>::dirac(pfa.num_states(), pfa.initial).weights().to_vec();
    if pfa.accepted_mass(&start) > half {
        return Ok(Some(Vec::new()));
    }
    let clock = budget.clock();
    let symbols = pfa.num_symbols();
    let mut spent = 0u64;
    // words of the current length in lexicographic order with their distributions
    let mut level: Vec<(Vec<usize>, Vec<S>)> = vec![(Vec::new(), start)];
    for len in 1..=max_len {
        spent = spent.saturating_add(budget.check_sequences(symbols, len, "word search")?);
        if spent > budget.max_sequences {
            return Err(Error::BudgetExceeded(format!(
                "word search visited more than {} words",
                budget.max_sequences
            )));
        }
        clock.check("word search")?;
        let mut next = Vec::with_capacity(level.len() * symbols);
        for (word, dist) in &level {
            for i in 0..symbols {
                let d = pfa.transitions[i].left_apply(dist);
                let mut w = word.clone();
                w.push(i);
                if pfa.accepted_mass(&d) > half {
                    return Ok(Some(w));
                }
                next.push((w, d));
            }
        }
        level = next;
    }
    Ok(None)
}
