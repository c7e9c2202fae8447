//! Blind stochastic games: ergodicity certificates, finite abstractions of
//! the belief dynamics, uniform-value approximation, and the reduction from
//! probabilistic automata.
//!
//! Every algorithm is generic over [`Scalar`], implemented for exact
//! rationals ([`Rational`]) and `f64`.

pub mod abstraction;
pub mod analysis;
pub mod budget;
pub mod ergodicity;
pub mod error;
pub mod game;
pub mod instances;
pub mod io;
pub mod matrix;
pub mod numeric;
pub mod oracles;
pub mod pfa;
pub mod solver;

pub use abstraction::{
    abstract_belief_set, build_abstract_game, stable_approximation, AbstractDynamics, AbstractGame, AbstractState,
    StableMatrixFamily,
};
pub use analysis::{classify, tau1, BooleanPattern, MatrixClassReport};
pub use budget::Budget;
pub use ergodicity::{n_epsilon, paz_bound, tau_bar, verify_ergodic, ErgodicityCertificate, Verdict};
pub use error::{Error, Result};
pub use game::{belief_step, forward_product, stage_reward, validate_game, ActionPair, ActionSequence, Belief, BlindGame};
pub use io::{game_to_json, parse_game, parse_game_str, parse_pfa, parse_pfa_str, pfa_to_json, GameFile};
pub use matrix::StochasticMatrix;
pub use numeric::{NumericMode, Rational, Scalar};
pub use oracles::{
    belief_tree_game, block_payoff_estimate, brute_force_value_n, coupling_check, payoff_gap_check, simulate,
    AbstractPolicy, PlayTrace, Strategy,
};
pub use pfa::{acceptance_probability, cyclic_block_payoff, exists_word_above_half, reduce_to_blind_mdp, Pfa, ReductionParams};
pub use solver::{
    approximate_uniform_value, matrix_game_value, mean_cycle_value, shapley_iterate, DeterministicGame, MatrixGame,
    SolveResult, SolverParams,
};
