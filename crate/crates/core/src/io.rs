//! JSON game and automaton files.
//!
//! Game file:
//!
//! ```json
//! {
//!   "states": ["G", "F", "P"],
//!   "actions1": ["Wait", "Repair"],
//!   "actions2": ["*"],
//!   "transitions": {"Wait|*": [[0.9, 0.1, 0], ...], ...},
//!   "rewards": {"Wait|*": [0.9, 0.55, 0.05], ...},
//!   "initial_belief": ["1/3", "1/3", "1/3"]
//! }
//! ```
//!
//! `actions2` defaults to `["*"]`, in which case transition and reward keys
//! may omit the `|*` suffix. `initial_belief` defaults to uniform. Numbers
//! may be JSON numbers or strings holding decimals or `p/q`; decimals are
//! read from their literal text, so `0.1` is exactly 1/10 in exact mode.
//!
//! Automaton file: `states`, `symbols`, `transitions` keyed by
//! `"state|symbol"` holding one row each, `accepting` (state names) and
//! `initial` (a state name).

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::game::{Belief, BlindGame};
use crate::numeric::Scalar;
use crate::pfa::Pfa;

/// A game together with its initial belief.
#[derive(Clone, Debug, PartialEq)]
pub struct GameFile<S> {
    pub game: BlindGame<S>,
    pub initial: Belief<S>,
}

fn syntax(err: serde_json::Error) -> Error {
    Error::parse(format!("line {} column {}", err.line(), err.column()), err.to_string())
}

fn field<'v>(obj: &'v Map<String, Value>, key: &str) -> Result<&'v Value> {
    obj.get(key).ok_or_else(|| Error::parse(key, "missing field"))
}

fn names(value: &Value, ctx: &str) -> Result<Vec<String>> {
    let arr = value
        .as_array()
        .ok_or_else(|| Error::parse(ctx, "expected an array of names"))?;
    let mut out: Vec<String> = Vec::with_capacity(arr.len());
    for (i, v) in arr.iter().enumerate() {
        let s = v
            .as_str()
            .ok_or_else(|| Error::parse(format!("{ctx}[{i}]"), "expected a string"))?;
        if s.contains('|') {
            return Err(Error::parse(format!("{ctx}[{i}]"), "names may not contain `|`"));
        }
        if out.iter().any(|o| o == s) {
            return Err(Error::parse(format!("{ctx}[{i}]"), format!("duplicate name `{s}`")));
        }
        out.push(s.to_string());
    }
    if out.is_empty() {
        return Err(Error::parse(ctx, "must not be empty"));
    }
    Ok(out)
}

fn number<S: Scalar>(value: &Value, ctx: &str) -> Result<S> {
    let text = match value {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(Error::parse(ctx, "expected a number or numeric string")),
    };
    S::parse_literal(&text).map_err(|m| Error::parse(ctx, m))
}

fn vector<S: Scalar>(value: &Value, len: usize, ctx: &str) -> Result<Vec<S>> {
    let arr = value
        .as_array()
        .ok_or_else(|| Error::parse(ctx, "expected an array"))?;
    if arr.len() != len {
        return Err(Error::parse(ctx, format!("expected {len} entries, got {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(i, v)| number(v, &format!("{ctx}[{i}]")))
        .collect()
}

fn matrix<S: Scalar>(value: &Value, k: usize, ctx: &str) -> Result<Vec<Vec<S>>> {
    let arr = value
        .as_array()
        .ok_or_else(|| Error::parse(ctx, "expected an array of rows"))?;
    if arr.len() != k {
        return Err(Error::parse(ctx, format!("expected {k} rows, got {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(r, row)| vector(row, k, &format!("{ctx}[{r}]")))
        .collect()
}

/// Resolves `"i|j"` (or `"i"` when player 2 has the single action `*`).
fn pair_key(key: &str, actions1: &[String], actions2: &[String]) -> Option<usize> {
    let (i, j) = match key.split_once('|') {
        Some((i, j)) => (i, j),
        None if actions2.len() == 1 => (key, actions2[0].as_str()),
        None => return None,
    };
    let i = actions1.iter().position(|a| a == i)?;
    let j = actions2.iter().position(|a| a == j)?;
    Some(i * actions2.len() + j)
}

fn keyed<T>(
    value: &Value,
    ctx: &str,
    actions1: &[String],
    actions2: &[String],
    mut read: impl FnMut(&Value, &str) -> Result<T>,
) -> Result<Vec<T>> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::parse(ctx, "expected an object keyed by action pair"))?;
    let pairs = actions1.len() * actions2.len();
    let mut slots: Vec<Option<T>> = (0..pairs).map(|_| None).collect();
    for (key, v) in obj {
        let a = pair_key(key, actions1, actions2)
            .ok_or_else(|| Error::parse(format!("{ctx}.{key}"), format!("unknown action pair `{key}`")))?;
        if slots[a].is_some() {
            return Err(Error::parse(format!("{ctx}.{key}"), "action pair given twice"));
        }
        slots[a] = Some(read(v, &format!("{ctx}.{key}"))?);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(a, s)| {
            s.ok_or_else(|| {
                let name = format!("{}|{}", actions1[a / actions2.len()], actions2[a % actions2.len()]);
                Error::parse(ctx, format!("missing action pair `{name}`"))
            })
        })
        .collect()
}

pub fn parse_game_str<S: Scalar>(text: &str) -> Result<GameFile<S>> {
    let root: Value = serde_json::from_str(text).map_err(syntax)?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::parse("top level", "expected an object"))?;
    let states = names(field(obj, "states")?, "states")?;
    let actions1 = names(field(obj, "actions1")?, "actions1")?;
    let actions2 = match obj.get("actions2") {
        Some(v) => names(v, "actions2")?,
        None => vec!["*".to_string()],
    };
    let k = states.len();
    let transitions = keyed(field(obj, "transitions")?, "transitions", &actions1, &actions2, |v, c| {
        matrix::<S>(v, k, c)
    })?;
    let rewards = keyed(field(obj, "rewards")?, "rewards", &actions1, &actions2, |v, c| vector::<S>(v, k, c))?;
    let game = BlindGame::new(states, actions1, actions2, transitions, rewards)?;
    let initial = match obj.get("initial_belief") {
        Some(v) => Belief::new(vector(v, k, "initial_belief")?)?,
        None => Belief::uniform(k),
    };
    Ok(GameFile { game, initial })
}

pub fn parse_game<S: Scalar>(path: impl AsRef<Path>) -> Result<GameFile<S>> {
    parse_game_str(&std::fs::read_to_string(path)?)
}

fn json_vec<S: Scalar>(v: &[S]) -> Value {
    Value::Array(v.iter().map(Scalar::to_json).collect())
}

pub fn game_to_json<S: Scalar>(file: &GameFile<S>) -> Value {
    let g = &file.game;
    let mut transitions = BTreeMap::new();
    let mut rewards = BTreeMap::new();
    for a in 0..g.num_pairs() {
        let rows: Vec<Value> = g.transition(a).rows().map(json_vec).collect();
        transitions.insert(g.pair_name(a), Value::Array(rows));
        rewards.insert(g.pair_name(a), json_vec(g.reward(a)));
    }
    json!({
        "states": g.states(),
        "actions1": g.actions1(),
        "actions2": g.actions2(),
        "transitions": transitions,
        "rewards": rewards,
        "initial_belief": file.initial.to_json(),
    })
}

pub fn parse_pfa_str<S: Scalar>(text: &str) -> Result<Pfa<S>> {
    let root: Value = serde_json::from_str(text).map_err(syntax)?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::parse("top level", "expected an object"))?;
    let states = names(field(obj, "states")?, "states")?;
    let symbols = names(field(obj, "symbols")?, "symbols")?;
    let k = states.len();
    let state_index = |name: &str, ctx: &str| {
        states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::parse(ctx, format!("unknown state `{name}`")))
    };
    let table = field(obj, "transitions")?
        .as_object()
        .ok_or_else(|| Error::parse("transitions", "expected an object keyed by `state|symbol`"))?;
    let mut rows: Vec<Vec<Option<Vec<S>>>> = vec![vec![None; k]; symbols.len()];
    for (key, v) in table {
        let ctx = format!("transitions.{key}");
        let (s, i) = key
            .split_once('|')
            .ok_or_else(|| Error::parse(&ctx, "key must be `state|symbol`"))?;
        let s = state_index(s, &ctx)?;
        let i = symbols
            .iter()
            .position(|x| x == i)
            .ok_or_else(|| Error::parse(&ctx, format!("unknown symbol `{i}`")))?;
        if rows[i][s].is_some() {
            return Err(Error::parse(&ctx, "row given twice"));
        }
        rows[i][s] = Some(vector(v, k, &ctx)?);
    }
    let mut transitions = Vec::with_capacity(symbols.len());
    for (i, sym_rows) in rows.into_iter().enumerate() {
        let mut m = Vec::with_capacity(k);
        for (s, r) in sym_rows.into_iter().enumerate() {
            m.push(r.ok_or_else(|| {
                Error::parse("transitions", format!("missing row `{}|{}`", states[s], symbols[i]))
            })?);
        }
        transitions.push(m);
    }
    let accepting = field(obj, "accepting")?
        .as_array()
        .ok_or_else(|| Error::parse("accepting", "expected an array of state names"))?
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let ctx = format!("accepting[{n}]");
            let name = v.as_str().ok_or_else(|| Error::parse(&ctx, "expected a string"))?;
            state_index(name, &ctx)
        })
        .collect::<Result<Vec<_>>>()?;
    let initial = field(obj, "initial")?
        .as_str()
        .ok_or_else(|| Error::parse("initial", "expected a state name"))?;
    let initial = state_index(initial, "initial")?;
    Pfa::new(states, symbols, transitions, accepting, initial)
}

pub fn parse_pfa<S: Scalar>(path: impl AsRef<Path>) -> Result<Pfa<S>> {
    parse_pfa_str(&std::fs::read_to_string(path)?)
}

pub fn pfa_to_json<S: Scalar>(pfa: &Pfa<S>) -> Value {
    let mut transitions = BTreeMap::new();
    for (i, sym) in pfa.symbols().iter().enumerate() {
        for (s, state) in pfa.states().iter().enumerate() {
            transitions.insert(format!("{state}|{sym}"), json_vec(pfa.transition(i).row(s)));
        }
    }
    let accepting: Vec<&String> = pfa.accepting().iter().map(|&b| &pfa.states()[b]).collect();
    json!({
        "states": pfa.states(),
        "symbols": pfa.symbols(),
        "transitions": transitions,
        "accepting": accepting,
        "initial": pfa.states()[pfa.initial()],
    })
}

/// The bundled machine-maintenance example file.
pub const MACHINE_MAINTENANCE_JSON: &str = include_str!("../data/machine_maintenance.json");

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::machine_maintenance;
    use crate::numeric::Rational;

    #[test]
    fn bundled_file_matches_builtin_instance() {
        let file: GameFile<Rational> = parse_game_str(MACHINE_MAINTENANCE_JSON).unwrap();
        assert_eq!(file.game.num_states(), 3);
        assert_eq!(file.game, machine_maintenance());
        assert_eq!(file.initial, Belief::uniform(3));
    }

    #[test]
    fn rational_strings_are_exact() {
        let text = r#"{"states":["a","b"],"actions1":["x"],
            "transitions":{"x":[["9/10","1/10"],[0.5,0.5]]},"rewards":{"x|*":[1,"0"]}}"#;
        let file: GameFile<Rational> = parse_game_str(text).unwrap();
        assert_eq!(file.game.transition(0).get(0, 0), &Rational::from_ratio(9, 10));
        assert_eq!(file.game.transition(0).get(1, 0), &Rational::from_ratio(1, 2));
    }

    #[test]
    fn unknown_and_missing_keys() {
        let text = r#"{"states":["a"],"actions1":["x"],"transitions":{"y|*":[[1]]},"rewards":{"x":[0]}}"#;
        let err = parse_game_str::<Rational>(text).unwrap_err();
        assert!(err.to_string().contains("y|*"), "{err}");
        let text = r#"{"states":["a"],"actions1":["x","z"],"transitions":{"x":[[1]]},"rewards":{"x":[0],"z":[0]}}"#;
        let err = parse_game_str::<Rational>(text).unwrap_err();
        assert!(err.to_string().contains("z|*"), "{err}");
        let err = parse_game_str::<Rational>("{\"states\": [}").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn validation_errors_pass_through() {
        let text = r#"{"states":["a","b"],"actions1":["x"],"transitions":{"x":[[0.5,0.6],[0.5,0.5]]},"rewards":{"x":[0,0]}}"#;
        assert!(matches!(parse_game_str::<Rational>(text), Err(Error::RowSum { .. })));
    }

    #[test]
    fn pfa_file() {
        let text = r#"{"states":["1","2"],"symbols":["a","b"],
            "transitions":{"1|a":[0.5,0.5],"2|a":[0,1],"1|b":[1,0],"2|b":[1,0]},
            "accepting":["2"],"initial":"1"}"#;
        let p: Pfa<Rational> = parse_pfa_str(text).unwrap();
        assert_eq!(p.accepting(), &[1]);
        let again: Pfa<Rational> = parse_pfa_str(&pfa_to_json(&p).to_string()).unwrap();
        assert_eq!(p, again);
        let absorbing = r#"{"states":["1","2"],"symbols":["a"],
            "transitions":{"1|a":[0.5,0.5],"2|a":[0,1]},"accepting":["2"],"initial":"1"}"#;
        assert!(matches!(parse_pfa_str::<Rational>(absorbing), Err(Error::AbsorbingAccepting(_))));
    }
}
