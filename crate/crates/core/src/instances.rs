//! Bundled instances and seeded random generators for test corpora.

use rand::Rng;

use crate::game::BlindGame;
use crate::numeric::{Rational, Scalar};
use crate::pfa::Pfa;

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn lit<S: Scalar>(text: &str) -> S {
    S::parse_literal(text).expect("literal")
}

fn rows<S: Scalar>(table: &[&[&str]]) -> Vec<Vec<S>> {
    table.iter().map(|r| r.iter().map(|t| lit(t)).collect()).collect()
}

/// Machine-maintenance blind MDP: states Good/Fair/Poor, actions
/// Wait/Basic Maintenance/Critical Repair.
pub fn machine_maintenance<S: Scalar>() -> BlindGame<S> {
    let wait = rows(&[&["0.9", "0.1", "0"], &["0", "0.7", "0.3"], &["0", "0.1", "0.9"]]);
    let basic = rows(&[&["0.95", "0.05", "0"], &["0.8", "0.2", "0"], &["0", "0.3", "0.7"]]);
    let repair = rows(&[&["1", "0", "0"], &["0.9", "0.1", "0"], &["0.3", "0.65", "0.05"]]);
    let rewards = vec![
        vec![lit("0.9"), lit("0.55"), lit("0.05")],
        vec![lit("0.1"), lit("0.7"), lit("0.4")],
        vec![lit("0.1"), lit("0.5"), lit("0.85")],
    ];
    BlindGame::new(
        vec!["G".into(), "F".into(), "P".into()],
        vec!["Wait".into(), "Basic".into(), "Repair".into()],
        vec!["*".into()],
        vec![wait, basic, repair],
        rewards,
    )
    .expect("bundled game is valid")
}

/// Two states, actions `swap` (permutation) and `stay` (identity).
pub fn swap_identity<S: Scalar>() -> BlindGame<S> {
    let swap = rows(&[&["0", "1"], &["1", "0"]]);
    let stay = rows(&[&["1", "0"], &["0", "1"]]);
    BlindGame::new(
        names("s", 2),
        vec!["swap".into(), "stay".into()],
        vec!["*".into()],
        vec![swap, stay],
        vec![vec![S::zero(), S::one()], vec![S::zero(), S::one()]],
    )
    .expect("valid")
}

/// Single-action game with the given transition rows and rewards.
pub fn single_action<S: Scalar>(transition: Vec<Vec<S>>, reward: Vec<S>) -> BlindGame<S> {
    let k = transition.len();
    BlindGame::new(
        names("s", k),
        vec!["a".into()],
        vec!["*".into()],
        vec![transition],
        vec![reward],
    )
    .expect("valid")
}

/// Row of multiples of `1/grain` summing to one.
pub fn random_grid_row<R: Rng>(rng: &mut R, k: usize, grain: i64) -> Vec<Rational> {
    let mut counts = vec![0i64; k];
    for _ in 0..grain {
        counts[rng.gen_range(0..k)] += 1;
    }
    counts
        .into_iter()
        .map(|c| Rational::from_ratio(c, grain))
        .collect()
}

pub fn random_grid_matrix<R: Rng>(rng: &mut R, k: usize, grain: i64) -> Vec<Vec<Rational>> {
    (0..k).map(|_| random_grid_row(rng, k, grain)).collect()
}

/// Random game whose transition and reward entries are multiples of `1/grain`.
pub fn random_game<R: Rng>(
    rng: &mut R,
    k: usize,
    n1: usize,
    n2: usize,
    grain: i64,
) -> BlindGame<Rational> {
    let pairs = n1 * n2;
    let transitions = (0..pairs).map(|_| random_grid_matrix(rng, k, grain)).collect();
    let rewards = (0..pairs)
        .map(|_| {
            (0..k)
                .map(|_| Rational::from_ratio(rng.gen_range(0..=grain), grain))
                .collect()
        })
        .collect();
    BlindGame::new(names("k", k), names("i", n1), names("j", n2), transitions, rewards)
        .expect("generated game is valid")
}

/// Random float stochastic matrix; roughly a third of entries are zeroed.
pub fn random_float_matrix<R: Rng>(rng: &mut R, k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| loop {
            let mut row: Vec<f64> = (0..k)
                .map(|_| if rng.gen_bool(0.35) { 0.0 } else { rng.gen::<f64>() })
                .collect();
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|x| *x /= total);
                break row;
            }
        })
        .collect()
}

/// Random PFA with grid-valued rows, a nonempty nonabsorbing accepting set,
/// and initial state 0.
pub fn random_pfa<R: Rng>(rng: &mut R, k: usize, symbols: usize, grain: i64) -> Pfa<Rational> {
    loop {
        let transitions: Vec<Vec<Vec<Rational>>> =
            (0..symbols).map(|_| random_grid_matrix(rng, k, grain)).collect();
        let accepting: Vec<usize> = (0..k).filter(|_| rng.gen_bool(0.5)).collect();
        if accepting.is_empty() {
            continue;
        }
        if let Ok(pfa) = Pfa::new(
            names("q", k),
            names("a", symbols),
            transitions,
            accepting,
            0,
        ) {
            return pfa;
        }
    }
}
