use thiserror::Error;

use crate::game::ActionSequence;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row} of the transition matrix for action {action} sums to {sum}, not 1")]
    RowSum { action: String, row: usize, sum: f64 },

    #[error("negative entry {value} at ({row}, {col}) of the transition matrix for action {action}")]
    NegativeEntry {
        action: String,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("reward {value} for action {action} in state {state} lies outside [0, 1]")]
    RewardRange {
        action: String,
        state: String,
        value: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unknown action {0}")]
    UnknownAction(String),

    #[error("unknown symbol {0}")]
    UnknownSymbol(String),

    #[error("game is not ergodic (non-scrambling product along a sequence of length {})", .witness.len())]
    NotErgodic { witness: ActionSequence },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("mean-cycle values need a single-player game, got {rows}x{cols} action sets")]
    NotSinglePlayer { rows: usize, cols: usize },

    #[error("accepting state {0} is absorbing")]
    AbsorbingAccepting(String),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    /// Input problems (as opposed to failed properties or exhausted budgets).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::NotErgodic { .. } | Error::BudgetExceeded(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
