//! Exact long-run values of single-player deterministic games.
//!
//! From any state the controller can reach a cycle and loop on it forever,
//! and no play does better than the best reachable cycle mean. The value is
//! therefore the best mean cycle over all strongly connected components
//! reachable from the state, found with Karp's algorithm per component.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::DeterministicGame;
use crate::error::{Error, Result};
use crate::numeric::Scalar;

/// Per-state optimal mean payoff: max cycle mean if player 2 has one action,
/// min cycle mean if player 1 has one action.
pub fn mean_cycle_value<S: Scalar>(game: &DeterministicGame<S>) -> Result<Vec<S>> {
    if !game.is_single_player() {
        return Err(Error::NotSinglePlayer {
            rows: game.num_actions1(),
            cols: game.num_actions2(),
        });
    }
    // a lone minimizer maximizes the negated rewards
    let sign = if game.num_actions2() == 1 { S::one() } else { -S::one() };
    let n = game.num_states();
    let pairs = game.num_pairs();

    let mut graph = DiGraph::<(), ()>::with_capacity(n, n * pairs);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for x in 0..n {
        for a in 0..pairs {
            graph.update_edge(nodes[x], nodes[game.next(x, a)], ());
        }
    }
    // components come out sinks first
    let components = tarjan_scc(&graph);
    let mut component_of = vec![0usize; n];
    for (c, members) in components.iter().enumerate() {
        for v in members {
            component_of[v.index()] = c;
        }
    }

    let mut best: Vec<Option<S>> = vec![None; components.len()];
    for (c, members) in components.iter().enumerate() {
        let states: Vec<usize> = members.iter().map(|v| v.index()).collect();
        let mut value = component_cycle_mean(game, &states, &component_of, c, &sign);
        for &x in &states {
            for a in 0..pairs {
                let d = component_of[game.next(x, a)];
                if d != c {
                    let below = best[d].clone().expect("successor components are solved first");
                    value = Some(match value {
                        Some(v) => S::max_of(v, below),
                        None => below,
                    });
                }
            }
        }
        best[c] = value;
    }
    Ok((0..n)
        .map(|x| {
            let v = best[component_of[x]].clone().expect("every state reaches a cycle");
            v * sign.clone()
        })
        .collect())
}

/// Karp's maximum cycle mean inside one component, or `None` if it has no
/// internal edge. Uses two passes so memory stays linear in the component.
fn component_cycle_mean<S: Scalar>(
    game: &DeterministicGame<S>,
    states: &[usize],
    component_of: &[usize],
    c: usize,
    sign: &S,
) -> Option<S> {
    let size = states.len();
    let mut local = std::collections::HashMap::with_capacity(size);
    for (i, &x) in states.iter().enumerate() {
        local.insert(x, i);
    }
    let mut edges: Vec<(usize, usize, S)> = Vec::new();
    for (i, &x) in states.iter().enumerate() {
        for a in 0..game.num_pairs() {
            let y = game.next(x, a);
            if component_of[y] == c {
                edges.push((i, local[&y], game.reward(x, a).clone() * sign.clone()));
            }
        }
    }
    if edges.is_empty() {
        return None;
    }
    let step = |prev: &[Option<S>]| {
        let mut out: Vec<Option<S>> = vec![None; size];
        for (u, v, w) in &edges {
            if let Some(du) = &prev[*u] {
                let cand = du.clone() + w.clone();
                if out[*v].as_ref().is_none_or(|dv| cand > *dv) {
                    out[*v] = Some(cand);
                }
            }
        }
        out
    };
    let start = || {
        let mut d: Vec<Option<S>> = vec![None; size];
        d[0] = Some(S::zero());
        d
    };
    let mut walk = start();
    for _ in 0..size {
        walk = step(&walk);
    }
    let last = walk;

    let mut worst: Vec<Option<S>> = vec![None; size];
    let mut walk = start();
    for k in 0..size {
        let gap = S::from_usize(size - k);
        for v in 0..size {
            if let (Some(dn), Some(dk)) = (&last[v], &walk[v]) {
                let ratio = (dn.clone() - dk.clone()) / gap.clone();
                if worst[v].as_ref().is_none_or(|w| ratio < *w) {
                    worst[v] = Some(ratio);
                }
            }
        }
        walk = step(&walk);
    }
    worst.into_iter().flatten().reduce(S::max_of)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn single_cycle() {
        let g = DeterministicGame::new(2, 1, 1, vec![1, 0], vec![q(0, 1), q(1, 1)]).unwrap();
        assert_eq!(mean_cycle_value(&g).unwrap(), vec![q(1, 2), q(1, 2)]);
    }

    #[test]
    fn fork_between_loops() {
        // state 0 chooses between loop states 1 (0.2) and 2 (0.7)
        let next = vec![1, 2, 1, 1, 2, 2];
        let reward = vec![q(0, 1), q(0, 1), q(1, 5), q(1, 5), q(7, 10), q(7, 10)];
        let g = DeterministicGame::new(3, 2, 1, next.clone(), reward.clone()).unwrap();
        assert_eq!(mean_cycle_value(&g).unwrap(), vec![q(7, 10), q(1, 5), q(7, 10)]);
        let g = DeterministicGame::new(3, 1, 2, next, reward).unwrap();
        assert_eq!(mean_cycle_value(&g).unwrap(), vec![q(1, 5), q(1, 5), q(7, 10)]);
    }

    #[test]
    fn best_cycle_inside_component() {
        // 0 <-> 1 with rewards 1, 0 and a self loop at 0 with reward 3/4
        let next = vec![1, 0, 0, 0];
        let reward = vec![q(1, 1), q(3, 4), q(0, 1), q(0, 1)];
        let g = DeterministicGame::new(2, 2, 1, next, reward).unwrap();
        assert_eq!(mean_cycle_value(&g).unwrap(), vec![q(3, 4), q(3, 4)]);
    }

    #[test]
    fn rejects_concurrent_games() {
        let g = DeterministicGame::new(1, 2, 2, vec![0; 4], vec![0.0; 4]).unwrap();
        assert!(matches!(mean_cycle_value(&g), Err(Error::NotSinglePlayer { .. })));
    }
}
