//! Thin wrappers over the kernel that count solver invocations per thread.
//! The count drives the deterministic `calls` clock.

use std::cell::Cell;
use std::time::Instant;

use lagbatch_milp::{LpSolution, MilpModel, MipOptions, MipSolution};
use serde::{Deserialize, Serialize};

use crate::error::Result;

thread_local! {
    static CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of LP and MILP solves issued on the current thread so far.
pub fn solver_calls() -> u64 {
    CALLS.with(|c| c.get())
}

fn bump() {
    CALLS.with(|c| c.set(c.get() + 1));
}

pub(crate) fn lp(model: &MilpModel) -> Result<LpSolution> {
    bump();
    Ok(lagbatch_milp::solve_lp(model)?)
}

pub(crate) fn milp(model: &MilpModel, opts: &MipOptions) -> Result<MipSolution> {
    bump();
    Ok(lagbatch_milp::solve_milp(model, opts)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    #[default]
    Wall,
    /// Virtual time: one millisecond per solver call.
    Calls,
}

/// Elapsed-time source for trajectories and time limits.
#[derive(Debug, Clone, Copy)]
pub struct Clock {
    mode: ClockMode,
    started: Instant,
    calls_at_start: u64,
}

impl Clock {
    pub const SECONDS_PER_CALL: f64 = 1e-3;

    pub fn start(mode: ClockMode) -> Self {
        Clock {
            mode,
            started: Instant::now(),
            calls_at_start: solver_calls(),
        }
    }

    pub fn mode(&self) -> ClockMode {
        self.mode
    }

    pub fn elapsed(&self) -> f64 {
        match self.mode {
            ClockMode::Wall => self.started.elapsed().as_secs_f64(),
            ClockMode::Calls => {
                (solver_calls() - self.calls_at_start) as f64 * Self::SECONDS_PER_CALL
            }
        }
    }
}
