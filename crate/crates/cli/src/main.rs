//! `ergo`: command-line front end for blind stochastic games.
//!
//! Exit codes: 0 success or property holds, 1 property fails, 2 input
//! error, 3 budget exceeded.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};

use ergoblind::analysis::{classify, tau1};
use ergoblind::oracles::{simulate, Strategy};
use ergoblind::pfa::exists_word_above_half;
use ergoblind::{
    approximate_uniform_value, build_abstract_game, coupling_check, game_to_json, n_epsilon, parse_game, parse_pfa,
    payoff_gap_check, reduce_to_blind_mdp, verify_ergodic, Budget, Error, GameFile, NumericMode, Rational,
    ReductionParams, Scalar, SolverParams,
};

#[derive(Parser, Debug)]
#[command(name = "ergo", version, about = "Ergodicity, abstraction and uniform values of blind stochastic games")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Serialize)]
struct GlobalArgs {
    /// Numeric mode; the ERGO_MODE environment variable takes precedence.
    #[arg(long, global = true, default_value = "exact")]
    mode: NumericMode,
    /// Emit the full JSON run report instead of a human-readable summary.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (default: machine parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Support patterns held by the ergodicity search.
    #[arg(long, global = true, default_value_t = 1 << 20)]
    max_patterns: usize,
    /// Action sequences enumerated by exhaustive procedures.
    #[arg(long, global = true, default_value_t = 1 << 24)]
    max_sequences: u64,
    /// States of an abstract game.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    max_states: usize,
    /// Wall-clock limit in milliseconds for the exponential searches.
    #[arg(long, global = true)]
    max_time_ms: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a game file.
    Validate(GameArg),
    /// Classify the transition matrix of every action pair.
    Classify(GameArg),
    /// Decide ergodicity and print the certificate.
    CheckErgodic(GameArg),
    /// Block length needed for a target precision.
    NEps(EpsArgs),
    /// Build the finite abstract game and print it as a graph.
    BuildAbstract(EpsArgs),
    /// Approximate the uniform value.
    Solve(SolveArgs),
    /// Reduce a probabilistic automaton to a blind MDP game file.
    ReducePfa(ReduceArgs),
    /// Search for a word accepted with probability above one half.
    PfaSearch(SearchArgs),
    /// Coupling and payoff-gap checks against brute force.
    OracleCheck(OracleArgs),
    /// Seeded play of two strategies.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Serialize)]
struct GameArg {
    game: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct EpsArgs {
    game: PathBuf,
    #[arg(long)]
    eps: String,
}

#[derive(Args, Debug, Serialize)]
struct SolveArgs {
    game: PathBuf,
    #[arg(long)]
    eps: String,
    /// Stopping tolerance of value iteration at the root.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Largest value-iteration horizon.
    #[arg(long, default_value_t = 1 << 20)]
    n_max: usize,
}

#[derive(Args, Debug, Serialize)]
struct ReduceArgs {
    pfa: PathBuf,
    #[arg(long, default_value = "1/2")]
    theta: String,
    /// Write the game file here instead of into the report.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SearchArgs {
    pfa: PathBuf,
    #[arg(long)]
    max_len: usize,
}

#[derive(Args, Debug, Serialize)]
struct OracleArgs {
    game: PathBuf,
    #[arg(long)]
    eps: String,
    /// Walk length for the coupling check (default: 3 block lengths).
    #[arg(long)]
    length: Option<usize>,
    /// Horizon for the payoff-gap check.
    #[arg(long, default_value_t = 3)]
    horizon: usize,
    /// Random walks when exhaustive enumeration exceeds the sequence budget.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    game: PathBuf,
    /// `uniform` or `cyclic:A,B,...` with action names or indices.
    #[arg(long, default_value = "uniform")]
    p1: String,
    #[arg(long, default_value = "uniform")]
    p2: String,
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Serialize)]
struct RunReport {
    command: &'static str,
    inputs: Value,
    outputs: Value,
    timings: Map<String, Value>,
    mode: NumericMode,
}

struct Timings(Map<String, Value>);

impl Timings {
    fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let started = Instant::now();
        let out = f();
        self.0.insert(name.into(), json!(started.elapsed().as_secs_f64() * 1e3));
        out
    }
}

struct Outcome {
    outputs: Value,
    holds: bool,
}

impl Outcome {
    fn ok(outputs: Value) -> Self {
        Self { outputs, holds: true }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NotErgodic { .. } => 1,
        Error::BudgetExceeded(_) => 3,
        _ => 2,
    }
}

fn scalar<S: Scalar>(text: &str, what: &str) -> Result<S, Error> {
    S::parse_literal(text).map_err(|m| Error::Domain(format!("--{what}: {m}")))
}

fn load<S: Scalar>(path: &Path, t: &mut Timings) -> Result<GameFile<S>, Error> {
    t.phase("parse", || parse_game(path))
}

fn strategy(spec: &str, names: &[String]) -> Result<Strategy, Error> {
    if spec == "uniform" {
        return Ok(Strategy::UniformRandom);
    }
    let list = spec
        .strip_prefix("cyclic:")
        .ok_or_else(|| Error::Domain(format!("strategy `{spec}`: expected `uniform` or `cyclic:...`")))?;
    let actions = list
        .split(',')
        .map(|tok| {
            let tok = tok.trim();
            names
                .iter()
                .position(|n| n == tok)
                .or_else(|| tok.parse::<usize>().ok().filter(|&i| i < names.len()))
                .ok_or_else(|| Error::UnknownAction(tok.into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Strategy::Cyclic(actions))
}

fn run<S: Scalar>(command: &Command, budget: &Budget, t: &mut Timings) -> Result<Outcome, Error> {
    match command {
        Command::Validate(a) => {
            let f = load::<S>(&a.game, t)?;
            let g = &f.game;
            Ok(Outcome::ok(json!({
                "valid": true,
                "num_states": g.num_states(),
                "num_actions1": g.num_actions1(),
                "num_actions2": g.num_actions2(),
                "initial_belief": f.initial.to_json(),
            })))
        }
        Command::Classify(a) => {
            let f = load::<S>(&a.game, t)?;
            let g = &f.game;
            let reports = t.phase("classify", || {
                (0..g.num_pairs())
                    .map(|p| {
                        let m = g.transition(p);
                        let c = classify(m)?;
                        Ok(json!({
                            "action": g.pair_name(p),
                            "markov": c.is_markov,
                            "scrambling": c.is_scrambling,
                            "sarymsakov": c.is_sarymsakov,
                            "sia": c.is_sia,
                            "stable": c.is_stable,
                            "tau1": tau1(m).to_json(),
                        }))
                    })
                    .collect::<Result<Vec<_>, Error>>()
            })?;
            Ok(Outcome::ok(json!({ "matrices": reports })))
        }
        Command::CheckErgodic(a) => {
            let f = load::<S>(&a.game, t)?;
            let cert = t.phase("verify_ergodic", || verify_ergodic(&f.game, budget))?;
            Ok(Outcome {
                outputs: cert.to_json(&f.game),
                holds: cert.is_ergodic(),
            })
        }
        Command::NEps(a) => {
            let f = load::<S>(&a.game, t)?;
            let eps = scalar::<S>(&a.eps, "eps")?;
            let cert = t.phase("verify_ergodic", || verify_ergodic(&f.game, budget))?;
            let mut out = cert.to_json(&f.game);
            if !cert.is_ergodic() {
                return Ok(Outcome { outputs: out, holds: false });
            }
            out["n_eps"] = json!(n_epsilon(&cert, &eps)?);
            Ok(Outcome::ok(out))
        }
        Command::BuildAbstract(a) => {
            let f = load::<S>(&a.game, t)?;
            let eps = scalar::<S>(&a.eps, "eps")?;
            let cert = t.phase("verify_ergodic", || verify_ergodic(&f.game, budget))?;
            cert.require_ergodic()?;
            let ag = t.phase("build_abstract", || build_abstract_game(&f.game, &f.initial, &eps, &cert, budget))?;
            Ok(Outcome::ok(ag.to_json()))
        }
        Command::Solve(a) => {
            let f = load::<S>(&a.game, t)?;
            let eps = scalar::<S>(&a.eps, "eps")?;
            let params = SolverParams {
                tol: a.tol,
                n_max: a.n_max,
                budget: budget.clone(),
            };
            let report = t.phase("solve", || approximate_uniform_value(&f.game, &f.initial, &eps, &params))?;
            Ok(Outcome::ok(report.to_json(&f.game)))
        }
        Command::ReducePfa(a) => {
            let pfa = t.phase("parse", || parse_pfa::<S>(&a.pfa))?;
            let params = ReductionParams::new(scalar::<S>(&a.theta, "theta")?)?;
            let reduced = t.phase("reduce", || reduce_to_blind_mdp(&pfa, &params))?;
            let file = game_to_json(&GameFile {
                game: reduced.game,
                initial: reduced.initial,
            });
            match &a.output {
                Some(path) => {
                    let text = serde_json::to_string_pretty(&file).expect("game json");
                    std::fs::write(path, text + "\n")?;
                    Ok(Outcome::ok(json!({ "written": path })))
                }
                None => Ok(Outcome::ok(json!({ "game": file }))),
            }
        }
        Command::PfaSearch(a) => {
            let pfa = t.phase("parse", || parse_pfa::<S>(&a.pfa))?;
            let found = t.phase("search", || exists_word_above_half(&pfa, a.max_len, budget))?;
            let word = found.as_ref().map(|w| {
                w.iter()
                    .map(|&s| pfa.symbols()[s].clone())
                    .collect::<Vec<_>>()
            });
            let probability = match &found {
                Some(w) => Some(ergoblind::acceptance_probability(&pfa, w)?.to_json()),
                None => None,
            };
            Ok(Outcome {
                outputs: json!({ "found": found.is_some(), "word": word, "acceptance": probability, "max_len": a.max_len }),
                holds: found.is_some(),
            })
        }
        Command::OracleCheck(a) => {
            let f = load::<S>(&a.game, t)?;
            let eps = scalar::<S>(&a.eps, "eps")?;
            let cert = t.phase("verify_ergodic", || verify_ergodic(&f.game, budget))?;
            let (n0, _) = cert.require_ergodic()?;
            let length = match a.length {
                Some(l) => l,
                None => 3 * n_epsilon(&cert, &eps)?.max(n0),
            };
            let coupling = t.phase("coupling", || {
                coupling_check(&f.game, &f.initial, &eps, length, budget, a.samples, a.seed)
            })?;
            let gap = t.phase("payoff_gap", || payoff_gap_check(&f.game, &f.initial, &eps, a.horizon, budget))?;
            let gap_holds = gap.gap <= gap.bound;
            let holds = coupling.holds() && gap_holds;
            Ok(Outcome {
                outputs: json!({
                    "pass": holds,
                    "coupling": {
                        "pass": coupling.holds(),
                        "n_eps": coupling.n_eps,
                        "length": coupling.length,
                        "exhaustive": coupling.exhaustive,
                        "walks": coupling.walks,
                        "seed": a.seed,
                        "bound": coupling.bound.to_json(),
                        "max_deviation": coupling.max_deviation.to_json(),
                        "first_block_max": coupling.first_block_max.to_json(),
                    },
                    "payoff_gap": {
                        "pass": gap_holds,
                        "horizon": gap.horizon,
                        "brute_force": gap.brute_force.to_json(),
                        "abstract_value": gap.abstract_value.to_json(),
                        "gap": gap.gap.to_json(),
                        "bound": gap.bound.to_json(),
                    },
                }),
                holds,
            })
        }
        Command::Simulate(a) => {
            let f = load::<S>(&a.game, t)?;
            let g = &f.game;
            let s1 = strategy(&a.p1, g.actions1())?;
            let s2 = strategy(&a.p2, g.actions2())?;
            let trace = t.phase("simulate", || simulate(g, &f.initial, &s1, &s2, a.horizon, a.seed))?;
            let mean = if trace.rewards.is_empty() {
                0.0
            } else {
                trace.rewards.iter().map(Scalar::to_f64).sum::<f64>() / trace.rewards.len() as f64
            };
            let history: Vec<String> = trace
                .history
                .pairs()
                .iter()
                .map(|p| format!("{}|{}", g.actions1()[p.i], g.actions2()[p.j]))
                .collect();
            Ok(Outcome::ok(json!({
                "seed": trace.seed,
                "rng": trace.rng,
                "history": history,
                "states": trace.states.iter().map(|&k| g.states()[k].clone()).collect::<Vec<_>>(),
                "rewards": trace.rewards.iter().map(Scalar::to_json).collect::<Vec<_>>(),
                "mean_reward": mean,
            })))
        }
    }
}

fn name(command: &Command) -> &'static str {
    match command {
        Command::Validate(_) => "validate",
        Command::Classify(_) => "classify",
        Command::CheckErgodic(_) => "check-ergodic",
        Command::NEps(_) => "n-eps",
        Command::BuildAbstract(_) => "build-abstract",
        Command::Solve(_) => "solve",
        Command::ReducePfa(_) => "reduce-pfa",
        Command::PfaSearch(_) => "pfa-search",
        Command::OracleCheck(_) => "oracle-check",
        Command::Simulate(_) => "simulate",
    }
}

fn inputs(command: &Command) -> Value {
    let v = match command {
        Command::Validate(a) | Command::Classify(a) | Command::CheckErgodic(a) => serde_json::to_value(a),
        Command::NEps(a) | Command::BuildAbstract(a) => serde_json::to_value(a),
        Command::Solve(a) => serde_json::to_value(a),
        Command::ReducePfa(a) => serde_json::to_value(a),
        Command::PfaSearch(a) => serde_json::to_value(a),
        Command::OracleCheck(a) => serde_json::to_value(a),
        Command::Simulate(a) => serde_json::to_value(a),
    };
    v.expect("arguments serialize")
}

fn human(command: &str, outputs: &Value) -> String {
    let mut text = format!("{command}\n");
    match outputs {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::String(s) => text += &format!("  {k}: {s}\n"),
                    other => text += &format!("  {k}: {other}\n"),
                }
            }
        }
        other => text += &format!("  {other}\n"),
    }
    text
}

/// Writes to stdout; a closed pipe is not an error worth reporting.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let mode = match std::env::var("ERGO_MODE") {
        Ok(v) if !v.trim().is_empty() => match v.parse::<NumericMode>() {
            Ok(m) => m,
            Err(e) => {
                eprintln!("error: ERGO_MODE: {e}");
                return ExitCode::from(2);
            }
        },
        _ => g.mode,
    };
    if let Some(n) = g.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let budget = Budget {
        max_patterns: g.max_patterns,
        max_sequences: g.max_sequences,
        max_states: g.max_states,
        max_time: g.max_time_ms.map(Duration::from_millis),
    };
    let mut timings = Timings(Map::new());
    let started = Instant::now();
    let result = match mode {
        NumericMode::Exact => run::<Rational>(&cli.command, &budget, &mut timings),
        NumericMode::Float => run::<f64>(&cli.command, &budget, &mut timings),
    };
    timings.0.insert("total".into(), json!(started.elapsed().as_secs_f64() * 1e3));
    let command = name(&cli.command);
    let (outputs, code) = match result {
        Ok(o) => {
            let code = if o.holds { 0 } else { 1 };
            (o.outputs, code)
        }
        Err(e) => {
            let code = exit_code(&e);
            if !g.json {
                eprintln!("error: {e}");
                return ExitCode::from(code);
            }
            let mut out = json!({ "error": e.to_string() });
            if let Error::NotErgodic { witness } = &e {
                out["counterexample_length"] = json!(witness.len());
            }
            (out, code)
        }
    };
    if g.json {
        let report = RunReport {
            command,
            inputs: inputs(&cli.command),
            outputs,
            timings: timings.0,
            mode,
        };
        emit(&(serde_json::to_string_pretty(&report).expect("report json") + "\n"));
    } else {
        emit(&human(command, &outputs));
    }
    ExitCode::from(code)
}
