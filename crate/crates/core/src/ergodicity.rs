//! Deciding the ergodic property and sizing the block length `n_ε`.
//!
//! A game is ergodic iff for some `n0` not larger than the Paz bound every
//! product of `n0` transition matrices has `τ₁ < 1`, i.e. is scrambling. The
//! search runs over support patterns, layer by layer. A scrambling pattern
//! only has scrambling extensions, so each layer keeps just its
//! non-scrambling members; the layer is all-scrambling exactly when that
//! frontier is empty.

use indexmap::IndexSet;
use rayon::prelude::*;
use serde_json::json;

use crate::analysis::{pattern_of, pattern_product, tau1, BooleanPattern};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::game::{ActionSequence, BlindGame};
use crate::matrix::StochasticMatrix;
use crate::numeric::{powi, Scalar};

/// `(3^k − 2^(k+1) + 1) / 2`.
pub fn paz_bound(k: usize) -> Result<u64> {
    if k == 0 {
        return Err(Error::Domain("the Paz bound needs at least one state".into()));
    }
    let overflow = || Error::Overflow(format!("Paz bound for {k} states"));
    let exp = u32::try_from(k).map_err(|_| overflow())?;
    let three = 3u128.checked_pow(exp).ok_or_else(overflow)?;
    let two = 2u128.checked_pow(exp + 1).ok_or_else(overflow)?;
    let value = (three + 1 - two) / 2;
    u64::try_from(value).map_err(|_| overflow())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Ergodic,
    NotErgodic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErgodicityCertificate<S> {
    pub verdict: Verdict,
    /// Smallest block length whose products are all scrambling.
    pub n0: Option<usize>,
    /// Largest `τ₁` over all products of length `n0`.
    pub tau_bar: Option<S>,
    pub paz_bound: u64,
    /// Sequence of Paz-bound length with a non-scrambling product.
    pub counterexample: Option<ActionSequence>,
}

impl<S: Scalar> ErgodicityCertificate<S> {
    pub fn is_ergodic(&self) -> bool {
        self.verdict == Verdict::Ergodic
    }

    /// `(n0, tau_bar)` or the not-ergodic error carrying the witness.
    pub fn require_ergodic(&self) -> Result<(usize, &S)> {
        match (self.verdict, self.n0, self.tau_bar.as_ref()) {
            (Verdict::Ergodic, Some(n0), Some(t)) => Ok((n0, t)),
            _ => Err(Error::NotErgodic {
                witness: self.counterexample.clone().unwrap_or_default(),
            }),
        }
    }

    pub fn to_json(&self, game: &BlindGame<S>) -> serde_json::Value {
        let counterexample = self.counterexample.as_ref().map(|seq| {
            seq.pairs()
                .iter()
                .map(|p| {
                    format!("{}|{}", game.actions1()[p.i], game.actions2()[p.j])
                })
                .collect::<Vec<_>>()
        });
        json!({
            "verdict": match self.verdict {
                Verdict::Ergodic => "ergodic",
                Verdict::NotErgodic => "not_ergodic",
            },
            "n0": self.n0,
            "tau_bar": self.tau_bar.as_ref().map(Scalar::to_json),
            "paz_bound": self.paz_bound,
            "counterexample": counterexample,
        })
    }
}

/// Layered support-pattern search for the smallest all-scrambling block length.
pub fn verify_ergodic<S: Scalar>(
    game: &BlindGame<S>,
    budget: &Budget,
) -> Result<ErgodicityCertificate<S>> {
    let clock = budget.clock();
    let k = game.num_states();
    let paz = paz_bound(k)?;
    // a single state is trivially scrambling at length 1 although the bound is 0
    let horizon = paz.max(1);
    let letters: Vec<BooleanPattern> = game
        .transitions()
        .iter()
        .map(pattern_of)
        .collect::<Result<_>>()?;

    // frontier[n] holds the distinct non-scrambling patterns of length n + 1,
    // back[n][idx] = (index of parent in frontier[n - 1], letter)
    let mut frontier: IndexSet<BooleanPattern> = IndexSet::new();
    let mut back: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for (a, p) in letters.iter().enumerate() {
        if !p.is_scrambling() && frontier.insert(p.clone()) {
            back[0].push((usize::MAX, a));
        }
    }
    let mut held = frontier.len();
    let mut length = 1u64;
    loop {
        if frontier.is_empty() {
            let n0 = length as usize;
            let tau = tau_bar(game, n0, budget)?;
            return Ok(ErgodicityCertificate {
                verdict: Verdict::Ergodic,
                n0: Some(n0),
                tau_bar: Some(tau),
                paz_bound: paz,
                counterexample: None,
            });
        }
        if length >= horizon {
            let witness = backtrack(&back, 0);
            return Ok(ErgodicityCertificate {
                verdict: Verdict::NotErgodic,
                n0: None,
                tau_bar: None,
                paz_bound: paz,
                counterexample: Some(game.unflatten(&witness)),
            });
        }
        clock.check("ergodicity search")?;
        let parents: Vec<&BooleanPattern> = frontier.iter().collect();
        let children: Vec<Vec<BooleanPattern>> = parents
            .par_iter()
            .map(|p| {
                letters
                    .iter()
                    .map(|l| pattern_product(p, l).expect("same size"))
                    .collect()
            })
            .collect();
        let mut next = IndexSet::new();
        let mut pointers = Vec::new();
        for (parent, kids) in children.into_iter().enumerate() {
            for (a, child) in kids.into_iter().enumerate() {
                if !child.is_scrambling() && next.insert(child) {
                    pointers.push((parent, a));
                }
            }
        }
        held += next.len();
        if held > budget.max_patterns {
            return Err(Error::BudgetExceeded(format!(
                "ergodicity search held more than {} patterns at length {}",
                budget.max_patterns,
                length + 1
            )));
        }
        back.push(pointers);
        frontier = next;
        length += 1;
    }
}

fn backtrack(back: &[Vec<(usize, usize)>], mut idx: usize) -> Vec<usize> {
    let mut seq = Vec::with_capacity(back.len());
    for layer in back.iter().rev() {
        let (parent, letter) = layer[idx];
        seq.push(letter);
        idx = parent;
    }
    seq.reverse();
    seq
}

/// Exact maximum of `τ₁` over all `|A|^n0` products of length `n0`.
pub fn tau_bar<S: Scalar>(game: &BlindGame<S>, n0: usize, budget: &Budget) -> Result<S> {
    if n0 == 0 {
        return Err(Error::Domain("tau_bar needs a block length of at least 1".into()));
    }
    budget.check_sequences(game.num_pairs(), n0, "tau_bar enumeration")?;
    let best = (0..game.num_pairs())
        .into_par_iter()
        .map(|a| {
            let mut best = S::zero();
            max_tau(game, game.transition(a), n0 - 1, &mut best);
            best
        })
        .reduce(S::zero, S::max_of);
    Ok(best)
}

fn max_tau<S: Scalar>(game: &BlindGame<S>, prefix: &StochasticMatrix<S>, left: usize, best: &mut S) {
    if left == 0 {
        let t = tau1(prefix);
        if t > *best {
            *best = t;
        }
        return;
    }
    for m in game.transitions() {
        let next = prefix.mul(m).expect("same size");
        max_tau(game, &next, left - 1, best);
    }
}

/// `n0 · max(1, ⌈ln ε / ln τ̄⌉)`, with `n0` when `τ̄ = 0`.
///
/// The ceiling is evaluated exactly: the result is the smallest `m ≥ 1` with
/// `τ̄^m ≤ ε`.
pub fn n_epsilon<S: Scalar>(cert: &ErgodicityCertificate<S>, eps: &S) -> Result<usize> {
    let (n0, tau) = cert.require_ergodic()?;
    if !(eps.is_positive() && *eps < S::one()) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if tau.is_zero() {
        return Ok(n0);
    }
    let estimate = (eps.to_f64().ln() / tau.to_f64().ln()).ceil();
    let mut m = if estimate.is_finite() && estimate >= 1.0 {
        estimate.min(1e9) as usize
    } else {
        1
    };
    while m > 1 && powi(tau, m - 1) <= *eps {
        m -= 1;
    }
    while powi(tau, m) > *eps {
        m += 1;
    }
    n0.checked_mul(m)
        .ok_or_else(|| Error::Overflow("n_eps exceeds machine range".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::is_stable;
    use crate::instances::{machine_maintenance, single_action, swap_identity};
    use crate::numeric::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn paz_values() {
        assert_eq!(paz_bound(1).unwrap(), 0);
        assert_eq!(paz_bound(2).unwrap(), 1);
        assert_eq!(paz_bound(3).unwrap(), 6);
        assert_eq!(paz_bound(4).unwrap(), 25);
        assert!(matches!(paz_bound(200), Err(Error::Overflow(_))));
        assert!(paz_bound(0).is_err());
    }

    #[test]
    fn table_game_is_ergodic_in_one_step() {
        let g = machine_maintenance::<Rational>();
        let cert = verify_ergodic(&g, &Budget::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Ergodic);
        assert_eq!(cert.n0, Some(1));
        // Basic Maintenance separates rows G and P the most
        assert_eq!(cert.tau_bar, Some(q(19, 20)));
        assert_eq!(tau1(g.transition(0)), q(9, 10));
        assert_eq!(cert.paz_bound, 6);
    }

    #[test]
    fn identity_and_swap_games_are_not_ergodic() {
        let id = single_action(vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]], vec![q(0, 1), q(1, 1)]);
        let cert = verify_ergodic(&id, &Budget::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::NotErgodic);
        assert_eq!(cert.counterexample.as_ref().unwrap().len(), 1);

        let g = swap_identity::<Rational>();
        let cert = verify_ergodic(&g, &Budget::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::NotErgodic);
        let witness = cert.counterexample.unwrap();
        assert_eq!(witness.len() as u64, cert.paz_bound);
        let product = crate::game::forward_product(&g, &witness).unwrap();
        assert_eq!(tau1(&product), q(1, 1));
        assert_eq!(tau_bar(&g, 1, &Budget::default()).unwrap(), q(1, 1));
    }

    #[test]
    fn finds_smallest_block_length() {
        // P = cyclic shift with a lazy state: not scrambling alone, P^k is for some k > 1
        let m = vec![
            vec![q(1, 2), q(1, 2), q(0, 1)],
            vec![q(0, 1), q(0, 1), q(1, 1)],
            vec![q(1, 1), q(0, 1), q(0, 1)],
        ];
        let g = single_action(m, vec![q(0, 1); 3]);
        let cert = verify_ergodic(&g, &Budget::default()).unwrap();
        let n0 = cert.n0.unwrap();
        assert!(n0 > 1);
        let seq = vec![0; n0];
        assert!(tau1(&g.product_flat(&seq)) < q(1, 1));
        assert_eq!(tau1(&g.product_flat(&seq[1..])), q(1, 1));
    }

    #[test]
    fn stable_game_has_zero_tau_bar() {
        let row = vec![q(1, 4), q(3, 4)];
        let g = single_action(vec![row.clone(), row], vec![q(1, 2), q(1, 2)]);
        assert!(is_stable(g.transition(0)));
        let cert = verify_ergodic(&g, &Budget::default()).unwrap();
        assert_eq!(cert.tau_bar, Some(q(0, 1)));
        assert_eq!(n_epsilon(&cert, &q(1, 100)).unwrap(), 1);
    }

    #[test]
    fn block_length_examples() {
        let cert = ErgodicityCertificate {
            verdict: Verdict::Ergodic,
            n0: Some(1),
            tau_bar: Some(q(9, 10)),
            paz_bound: 6,
            counterexample: None,
        };
        assert_eq!(n_epsilon(&cert, &q(1, 10)).unwrap(), 22);
        assert_eq!(n_epsilon(&cert, &q(9, 10)).unwrap(), 1);
        assert!(matches!(n_epsilon(&cert, &q(1, 1)), Err(Error::Domain(_))));
        assert!(matches!(n_epsilon(&cert, &q(0, 1)), Err(Error::Domain(_))));

        let g = machine_maintenance::<Rational>();
        let cert = verify_ergodic(&g, &Budget::default()).unwrap();
        assert_eq!(n_epsilon(&cert, &q(1, 10)).unwrap(), 45);
        assert_eq!(n_epsilon(&cert, &q(9, 10)).unwrap(), 3);
        assert_eq!(n_epsilon(&cert, &q(19, 20)).unwrap(), 1);

        let float = machine_maintenance::<f64>();
        let cert = verify_ergodic(&float, &Budget::default()).unwrap();
        assert_eq!(n_epsilon(&cert, &0.1).unwrap(), 45);
        assert_eq!(n_epsilon(&cert, &0.9).unwrap(), 3);

        let bad = verify_ergodic(&swap_identity::<Rational>(), &Budget::default()).unwrap();
        assert!(matches!(n_epsilon(&bad, &q(1, 2)), Err(Error::NotErgodic { .. })));
    }

    #[test]
    fn exact_ceiling_at_powers() {
        // eps = tau^2 exactly must give 2 blocks, not 3
        let cert = ErgodicityCertificate {
            verdict: Verdict::Ergodic,
            n0: Some(3),
            tau_bar: Some(q(7, 10)),
            paz_bound: 6,
            counterexample: None,
        };
        assert_eq!(n_epsilon(&cert, &q(49, 100)).unwrap(), 6);
        assert_eq!(n_epsilon(&cert, &q(7, 10)).unwrap(), 3);
    }

    #[test]
    fn budget_is_enforced() {
        let g = machine_maintenance::<Rational>();
        let tiny = Budget {
            max_sequences: 2,
            ..Budget::default()
        };
        assert!(matches!(tau_bar(&g, 1, &tiny), Err(Error::BudgetExceeded(_))));
    }
}
