//! Independent baselines: exact finite-horizon values by history-tree
//! recursion, seeded play simulation, and direct checks of how far the
//! abstract dynamics drift from the true beliefs.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::abstraction::{build_abstract_game, AbstractDynamics, AbstractState};
use crate::budget::Budget;
use crate::ergodicity::{n_epsilon, verify_ergodic};
use crate::error::{Error, Result};
use crate::game::{ActionPair, ActionSequence, Belief, BlindGame};
use crate::numeric::Scalar;
use crate::solver::{shapley_iterate, DeterministicGame, MatrixGame};

/// Name of the generator behind every seeded routine here.
pub const RNG_NAME: &str = "ChaCha8";

const NATURE_STREAM: u64 = 0;
const PLAYER1_STREAM: u64 = 1;
const PLAYER2_STREAM: u64 = 2;

fn aggregate<S: Scalar>(game: &BlindGame<S>, entries: Vec<S>) -> Result<S> {
    if game.num_actions2() == 1 {
        return Ok(entries.into_iter().reduce(S::max_of).expect("nonempty"));
    }
    if game.num_actions1() == 1 {
        return Ok(entries.into_iter().reduce(S::min_of).expect("nonempty"));
    }
    Ok(MatrixGame::from_flat(game.num_actions1(), game.num_actions2(), entries)
        .solve()?
        .value)
}

fn total_value<S: Scalar>(game: &BlindGame<S>, belief: &Belief<S>, stages: usize) -> Result<S> {
    if stages == 0 {
        return Ok(S::zero());
    }
    let entries = (0..game.num_pairs())
        .map(|a| {
            let cont = total_value(game, &game.step_flat(belief, a), stages - 1)?;
            Ok(game.reward_flat(belief, a) + cont)
        })
        .collect::<Result<Vec<S>>>()?;
    aggregate(game, entries)
}

fn tree_size(pairs: usize, depth: usize, budget: &Budget) -> Result<u64> {
    let mut total = 0u64;
    for t in 0..=depth {
        total = total.saturating_add(budget.check_sequences(pairs, t, "history tree")?);
    }
    if total > budget.max_sequences {
        return Err(Error::BudgetExceeded(format!(
            "history tree of depth {depth} has more than {} nodes",
            budget.max_sequences
        )));
    }
    Ok(total)
}

/// `N`-stage value `v_N(b1)` by backward induction over every history.
pub fn brute_force_value_n<S: Scalar>(game: &BlindGame<S>, b1: &Belief<S>, stages: usize, budget: &Budget) -> Result<S> {
    if stages == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    game.check_belief(b1)?;
    tree_size(game.num_pairs(), stages, budget)?;
    Ok(total_value(game, b1, stages)? / S::from_usize(stages))
}

/// The unabstracted belief game cut at depth `N`: one state per history,
/// depth-`N` histories loop on themselves with reward 0. State 0 is the
/// empty history.
pub fn belief_tree_game<S: Scalar>(
    game: &BlindGame<S>,
    b1: &Belief<S>,
    stages: usize,
    budget: &Budget,
) -> Result<DeterministicGame<S>> {
    game.check_belief(b1)?;
    let size = tree_size(game.num_pairs(), stages, budget)? as usize;
    let pairs = game.num_pairs();
    let mut beliefs = Vec::with_capacity(size);
    let mut depth = Vec::with_capacity(size);
    beliefs.push(b1.clone());
    depth.push(0usize);
    let mut next = Vec::with_capacity(size * pairs);
    let mut reward = Vec::with_capacity(size * pairs);
    let mut cursor = 0;
    while cursor < beliefs.len() {
        let b = beliefs[cursor].clone();
        for a in 0..pairs {
            if depth[cursor] == stages {
                next.push(cursor);
                reward.push(S::zero());
            } else {
                next.push(beliefs.len());
                reward.push(game.reward_flat(&b, a));
                beliefs.push(game.step_flat(&b, a));
                depth.push(depth[cursor] + 1);
            }
        }
        cursor += 1;
    }
    DeterministicGame::new(beliefs.len(), game.num_actions1(), game.num_actions2(), next, reward)
}

/// Stationary behaviour on an abstract game: a successor table to follow the
/// abstract state and a mixed action per state. Indices refer to the
/// abstract game the table was taken from; state 0 is its root.
#[derive(Clone, Debug, PartialEq)]
pub struct AbstractPolicy {
    num_pairs: usize,
    next: Vec<usize>,
    mixed: Vec<Vec<f64>>,
}

impl AbstractPolicy {
    pub fn new<S: Scalar>(game: &DeterministicGame<S>, mixed: Vec<Vec<f64>>) -> Result<Self> {
        if mixed.len() != game.num_states() {
            return Err(Error::Shape(format!(
                "{} mixed actions for {} abstract states",
                mixed.len(),
                game.num_states()
            )));
        }
        for m in &mixed {
            let total: f64 = m.iter().sum();
            if m.is_empty() || m.iter().any(|p| *p < 0.0 || !p.is_finite()) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::Domain("mixed action is not a distribution".into()));
            }
        }
        Ok(Self {
            num_pairs: game.num_pairs(),
            next: game.successors().to_vec(),
            mixed,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    /// Repeats the listed actions of the player forever.
    Cyclic(Vec<usize>),
    UniformRandom,
    AbstractStationary(AbstractPolicy),
}

impl Strategy {
    fn validate(&self, actions: usize) -> Result<()> {
        match self {
            Strategy::Cyclic(seq) if seq.is_empty() => {
                Err(Error::Domain("cyclic strategy needs at least one action".into()))
            }
            Strategy::Cyclic(seq) => match seq.iter().find(|&&a| a >= actions) {
                Some(bad) => Err(Error::UnknownAction(format!("#{bad}"))),
                None => Ok(()),
            },
            Strategy::UniformRandom => Ok(()),
            Strategy::AbstractStationary(p) => {
                if p.mixed.iter().any(|m| m.len() != actions) {
                    return Err(Error::Shape("mixed action length differs from the action count".into()));
                }
                Ok(())
            }
        }
    }
}

/// A strategy bound to its own random stream and abstract-state cursor.
struct Player<'s> {
    strategy: &'s Strategy,
    actions: usize,
    rng: ChaCha8Rng,
    abstract_state: usize,
    tables: Vec<WeightedIndex<f64>>,
}

impl<'s> Player<'s> {
    fn new(strategy: &'s Strategy, actions: usize, seed: u64, stream: u64) -> Result<Self> {
        strategy.validate(actions)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let tables = match strategy {
            Strategy::AbstractStationary(p) => p
                .mixed
                .iter()
                .map(|m| WeightedIndex::new(m).map_err(|e| Error::Domain(e.to_string())))
                .collect::<Result<_>>()?,
            _ => Vec::new(),
        };
        Ok(Self {
            strategy,
            actions,
            rng,
            abstract_state: 0,
            tables,
        })
    }

    fn choose(&mut self, stage: usize) -> usize {
        match self.strategy {
            Strategy::Cyclic(seq) => seq[stage % seq.len()],
            Strategy::UniformRandom => self.rng.gen_range(0..self.actions),
            Strategy::AbstractStationary(_) => self.tables[self.abstract_state].sample(&mut self.rng),
        }
    }

    fn observe(&mut self, pair: usize) {
        if let Strategy::AbstractStationary(p) = self.strategy {
            self.abstract_state = p.next[self.abstract_state * p.num_pairs + pair];
        }
    }
}

/// Samples initial and successor states.
struct Nature {
    rng: ChaCha8Rng,
    initial: WeightedIndex<f64>,
    /// `rows[a * K + k]`
    rows: Vec<WeightedIndex<f64>>,
    states: usize,
}

impl Nature {
    fn new<S: Scalar>(game: &BlindGame<S>, b1: &Belief<S>, seed: u64) -> Result<Self> {
        let weights = |w: &[S]| {
            WeightedIndex::new(w.iter().map(Scalar::to_f64)).map_err(|e| Error::Domain(e.to_string()))
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(NATURE_STREAM);
        let rows = game
            .transitions()
            .iter()
            .flat_map(|m| m.rows().map(weights).collect::<Vec<_>>())
            .collect::<Result<_>>()?;
        Ok(Self {
            rng,
            initial: weights(b1.weights())?,
            rows,
            states: game.num_states(),
        })
    }

    fn start(&mut self) -> usize {
        self.initial.sample(&mut self.rng)
    }

    fn step(&mut self, state: usize, pair: usize) -> usize {
        self.rows[pair * self.states + state].sample(&mut self.rng)
    }
}

/// One seeded play. `states[m]` and `beliefs[m]` describe stage `m + 1`;
/// both have one more entry than `history`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayTrace<S> {
    pub seed: u64,
    pub rng: &'static str,
    pub history: ActionSequence,
    pub states: Vec<usize>,
    pub rewards: Vec<S>,
    pub beliefs: Vec<Belief<S>>,
}

pub fn simulate<S: Scalar>(
    game: &BlindGame<S>,
    b1: &Belief<S>,
    strat1: &Strategy,
    strat2: &Strategy,
    horizon: usize,
    seed: u64,
) -> Result<PlayTrace<S>> {
    game.check_belief(b1)?;
    let mut nature = Nature::new(game, b1, seed)?;
    let mut p1 = Player::new(strat1, game.num_actions1(), seed, PLAYER1_STREAM)?;
    let mut p2 = Player::new(strat2, game.num_actions2(), seed, PLAYER2_STREAM)?;
    let mut state = nature.start();
    let mut belief = b1.clone();
    let mut trace = PlayTrace {
        seed,
        rng: RNG_NAME,
        history: ActionSequence::empty(),
        states: vec![state],
        rewards: Vec::with_capacity(horizon),
        beliefs: vec![belief.clone()],
    };
    for stage in 0..horizon {
        let pair = ActionPair::new(p1.choose(stage), p2.choose(stage));
        let a = game.pair_index(pair)?;
        p1.observe(a);
        p2.observe(a);
        trace.rewards.push(game.reward(a)[state].clone());
        state = nature.step(state, a);
        belief = game.step_flat(&belief, a);
        trace.history.0.push(pair);
        trace.states.push(state);
        trace.beliefs.push(belief.clone());
    }
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockEstimate {
    pub blocks: usize,
    pub block_len: usize,
    pub mean: f64,
    pub std_error: f64,
}

/// Mean over `blocks` consecutive blocks of the per-block average reward,
/// with its standard error; runs in constant memory.
pub fn block_payoff_estimate<S: Scalar>(
    game: &BlindGame<S>,
    b1: &Belief<S>,
    strat1: &Strategy,
    strat2: &Strategy,
    block_len: usize,
    blocks: usize,
    seed: u64,
) -> Result<BlockEstimate> {
    if block_len == 0 || blocks < 2 {
        return Err(Error::Domain("need a positive block length and at least two blocks".into()));
    }
    game.check_belief(b1)?;
    let rewards: Vec<Vec<f64>> = (0..game.num_pairs())
        .map(|a| game.reward(a).iter().map(Scalar::to_f64).collect())
        .collect();
    let mut nature = Nature::new(game, b1, seed)?;
    let mut p1 = Player::new(strat1, game.num_actions1(), seed, PLAYER1_STREAM)?;
    let mut p2 = Player::new(strat2, game.num_actions2(), seed, PLAYER2_STREAM)?;
    let mut state = nature.start();
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    let mut stage = 0;
    for _ in 0..blocks {
        let mut block = 0.0;
        for _ in 0..block_len {
            let a = p1.choose(stage) * game.num_actions2() + p2.choose(stage);
            p1.observe(a);
            p2.observe(a);
            block += rewards[a][state];
            state = nature.step(state, a);
            stage += 1;
        }
        let avg = block / block_len as f64;
        sum += avg;
        sum_sq += avg * avg;
    }
    let n = blocks as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(BlockEstimate {
        blocks,
        block_len,
        mean,
        std_error: (var / n).sqrt(),
    })
}

/// Largest L1 gap between true beliefs and projected abstract states.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingReport<S> {
    pub n_eps: usize,
    pub length: usize,
    pub exhaustive: bool,
    pub walks: u64,
    pub bound: S,
    pub max_deviation: S,
    /// Maximum over stages `1..=n_eps`, i.e. after at most `n_eps − 1` actions.
    pub first_block_max: S,
}

impl<S: Scalar> CouplingReport<S> {
    pub fn holds(&self) -> bool {
        self.max_deviation <= self.bound && self.first_block_max.is_zero()
    }
}

struct CouplingWalk<'a, 'g, S: Scalar> {
    game: &'g BlindGame<S>,
    dynamics: &'a mut AbstractDynamics<'g, S>,
    n: usize,
    max: S,
    first: S,
}

impl<S: Scalar> CouplingWalk<'_, '_, S> {
    fn record(&mut self, t: usize, b: &Belief<S>, p: &Belief<S>) {
        let d = b.l1_distance(p);
        if t < self.n && d > self.first {
            self.first = d.clone();
        }
        if d > self.max {
            self.max = d;
        }
    }

    fn advance(&mut self, b: &Belief<S>, x: &AbstractState, p: &Belief<S>, a: usize) -> (Belief<S>, AbstractState, Belief<S>) {
        let y = self.dynamics.update(x, a);
        let q = if y.prefix.is_empty() {
            self.dynamics.belief(y.base).clone()
        } else {
            self.game.step_flat(p, a)
        };
        (self.game.step_flat(b, a), y, q)
    }

    fn dfs(&mut self, t: usize, left: usize, b: Belief<S>, x: AbstractState, p: Belief<S>) {
        self.record(t, &b, &p);
        if left == 0 {
            return;
        }
        for a in 0..self.game.num_pairs() {
            let (b2, y, q) = self.advance(&b, &x, &p, a);
            self.dfs(t + 1, left - 1, b2, y, q);
        }
    }
}

/// Walks the true belief and the abstract state along identical action
/// sequences of length `length`: every sequence if they fit in the budget,
/// otherwise `samples` uniformly random ones.
pub fn coupling_check<S: Scalar>(
    game: &BlindGame<S>,
    b1: &Belief<S>,
    eps: &S,
    length: usize,
    budget: &Budget,
    samples: u64,
    seed: u64,
) -> Result<CouplingReport<S>> {
    let cert = verify_ergodic(game, budget)?;
    let n = n_epsilon(&cert, eps)?;
    let mut dynamics = AbstractDynamics::new(game, n)?;
    let root = dynamics.root(b1)?;
    let exhaustive = budget.check_sequences(game.num_pairs(), length, "coupling walks").is_ok();
    let mut walk = CouplingWalk {
        game,
        dynamics: &mut dynamics,
        n,
        max: S::zero(),
        first: S::zero(),
    };
    let walks = if exhaustive {
        walk.dfs(0, length, b1.clone(), root, b1.clone());
        (game.num_pairs() as u64).pow(length as u32)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clock = budget.clock();
        for w in 0..samples {
            if w % 256 == 0 {
                clock.check("coupling walks")?;
            }
            let (mut b, mut x, mut p) = (b1.clone(), root.clone(), b1.clone());
            walk.record(0, &b, &p);
            for t in 1..=length {
                let a = rng.gen_range(0..game.num_pairs());
                (b, x, p) = walk.advance(&b, &x, &p, a);
                walk.record(t, &b, &p);
            }
        }
        samples
    };
    Ok(CouplingReport {
        n_eps: n,
        length,
        exhaustive,
        walks,
        bound: eps.clone() * S::from_usize(4),
        max_deviation: walk.max,
        first_block_max: walk.first,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PayoffGapReport<S> {
    pub horizon: usize,
    pub n_eps: usize,
    pub brute_force: S,
    pub abstract_value: S,
    pub gap: S,
    pub bound: S,
}

/// `|v_N(b1) − v*_N|` between the exact game and its abstraction at the root.
pub fn payoff_gap_check<S: Scalar>(
    game: &BlindGame<S>,
    b1: &Belief<S>,
    eps: &S,
    stages: usize,
    budget: &Budget,
) -> Result<PayoffGapReport<S>> {
    let brute = brute_force_value_n(game, b1, stages, budget)?;
    let cert = verify_ergodic(game, budget)?;
    let abstract_game = build_abstract_game(game, b1, eps, &cert, budget)?;
    let solved = shapley_iterate(&abstract_game.dynamics, stages)?;
    Ok(PayoffGapReport {
        horizon: stages,
        n_eps: abstract_game.n_eps,
        gap: (brute.clone() - solved.root_value.clone()).abs(),
        brute_force: brute,
        abstract_value: solved.root_value,
        bound: eps.clone() * S::from_usize(4),
    })
}
