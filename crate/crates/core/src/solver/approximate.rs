use serde::Serialize;
use serde_json::json;

use super::mean_cycle::mean_cycle_value;
use super::value_iteration::ValueIterator;
use crate::abstraction::build_abstract_game;
use crate::budget::Budget;
use crate::ergodicity::{n_epsilon, verify_ergodic, ErgodicityCertificate};
use crate::error::Result;
use crate::game::{Belief, BlindGame};
use crate::numeric::Scalar;

#[derive(Clone, Debug)]
pub struct SolverParams {
    /// Stop doubling the horizon once `|v_N − v_{N/2}|` at the root is at most this.
    pub tol: f64,
    pub n_max: usize,
    pub budget: Budget,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            n_max: 1 << 20,
            budget: Budget::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    MeanCycle,
    ValueIteration,
}

#[derive(Clone, Debug)]
pub struct UniformValueReport<S> {
    pub certificate: ErgodicityCertificate<S>,
    pub n_eps: usize,
    pub abstract_states: usize,
    pub num_beliefs: usize,
    pub method: SolveMethod,
    /// Exact abstract value at the root; single-player games only.
    pub exact_root_value: Option<S>,
    pub root_value: f64,
    /// The uniform value lies within this distance of the abstract value.
    pub guarantee_radius: S,
    /// Heuristic solver error of value iteration, not part of the guarantee.
    pub residual: Option<f64>,
    pub horizon: Option<usize>,
}

impl<S: Scalar> UniformValueReport<S> {
    pub fn to_json(&self, game: &BlindGame<S>) -> serde_json::Value {
        json!({
            "ergodic": self.certificate.is_ergodic(),
            "certificate": self.certificate.to_json(game),
            "n0": self.certificate.n0,
            "tau_bar": self.certificate.tau_bar.as_ref().map(Scalar::to_json),
            "n_eps": self.n_eps,
            "abstract_states": self.abstract_states,
            "num_beliefs": self.num_beliefs,
            "method": self.method,
            "root_value": self.exact_root_value.as_ref().map_or_else(|| json!(self.root_value), Scalar::to_json),
            "root_value_f64": self.root_value,
            "guarantee_radius": self.guarantee_radius.to_json(),
            "residual": self.residual,
            "horizon": self.horizon,
        })
    }
}

/// Certificate, block length, abstraction and abstract value in one run.
pub fn approximate_uniform_value<S: Scalar>(
    game: &BlindGame<S>,
    b1: &Belief<S>,
    eps: &S,
    params: &SolverParams,
) -> Result<UniformValueReport<S>> {
    let certificate = verify_ergodic(game, &params.budget)?;
    let n_eps = n_epsilon(&certificate, eps)?;
    let abstract_game = build_abstract_game(game, b1, eps, &certificate, &params.budget)?;
    let guarantee_radius = eps.clone() * S::from_usize(4);
    let dynamics = &abstract_game.dynamics;
    let mut report = UniformValueReport {
        certificate,
        n_eps,
        abstract_states: abstract_game.num_states(),
        num_beliefs: abstract_game.num_beliefs(),
        method: SolveMethod::MeanCycle,
        exact_root_value: None,
        root_value: 0.0,
        guarantee_radius,
        residual: None,
        horizon: None,
    };
    if dynamics.is_single_player() {
        let values = mean_cycle_value(dynamics)?;
        report.root_value = values[0].to_f64();
        report.exact_root_value = Some(values[0].clone());
        return Ok(report);
    }
    let float = dynamics.to_f64();
    let mut it = ValueIterator::new(&float);
    it.step()?;
    let mut previous = it.average(0);
    let mut residual = f64::INFINITY;
    while it.horizon() < params.n_max.max(1) {
        let target = (it.horizon() * 2).min(params.n_max);
        while it.horizon() < target {
            it.step()?;
        }
        let current = it.average(0);
        residual = (current - previous).abs();
        previous = current;
        if residual <= params.tol {
            break;
        }
    }
    report.method = SolveMethod::ValueIteration;
    report.root_value = previous;
    report.residual = Some(if residual.is_finite() { residual } else { 0.0 });
    report.horizon = Some(it.horizon());
    Ok(report)
}
