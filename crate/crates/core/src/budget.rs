use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Resource limits for the exponential procedures. Exhausting any of them is
/// reported as [`Error::BudgetExceeded`]; nothing is silently truncated.
#[derive(Clone, Debug)]
pub struct Budget {
    /// Distinct support patterns held by the ergodicity search.
    pub max_patterns: usize,
    /// Action sequences enumerated by exhaustive procedures.
    pub max_sequences: u64,
    /// States of an abstract game.
    pub max_states: usize,
    pub max_time: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_patterns: 1 << 20,
            max_sequences: 1 << 24,
            max_states: 1_000_000,
            max_time: None,
        }
    }
}

impl Budget {
    pub fn unlimited_time(self) -> Self {
        Self {
            max_time: None,
            ..self
        }
    }

    pub(crate) fn clock(&self) -> Clock {
        Clock {
            started: Instant::now(),
            limit: self.max_time,
        }
    }

    /// Fails unless `base^len` sequences fit in the sequence budget.
    pub(crate) fn check_sequences(&self, base: usize, len: usize, what: &str) -> Result<u64> {
        let count = (base as u64)
            .checked_pow(len as u32)
            .filter(|c| *c <= self.max_sequences)
            .ok_or_else(|| {
                Error::BudgetExceeded(format!(
                    "{what}: {base}^{len} sequences exceed the limit of {}",
                    self.max_sequences
                ))
            })?;
        Ok(count)
    }
}

pub(crate) struct Clock {
    started: Instant,
    limit: Option<Duration>,
}

impl Clock {
    pub(crate) fn check(&self, what: &str) -> Result<()> {
        match self.limit {
            Some(limit) if self.started.elapsed() > limit => Err(Error::BudgetExceeded(format!(
                "{what}: time limit of {limit:?} reached"
            ))),
            _ => Ok(()),
        }
    }
}
