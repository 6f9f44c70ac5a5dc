// SPDX-License-Identifier: Apache-2.0

//! Multi-level simulation.
//!
//! | level | model | time unit |
//! |-------|-------|-----------|
//! | 0 | whole model, one evaluation per tick | tick |
//! | 1 | partitioned actors over depth-bounded FIFOs | tick |
//! | 2 | task FSMs with send/recv, functional hardware | local cycles |
//! | 3 | lowered task FSMs on processors and a bus, cycle-level hardware | cycles |

mod actor;
mod cycle;
mod fabric;
mod levels;
mod trace;

use thiserror::Error;

pub use cycle::{cosimulate_mixed, NodeLevel};
pub use levels::{simulate, SimResult};
pub use trace::{compare_traces, CompareMode, Comparison, Event, Mismatch, Stimulus, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("unknown simulation level {0}")]
    Level(u8),
    #[error("{0}")]
    Format(String),
    #[error("trace port sets differ: {left:?} vs {right:?}")]
    PortSet { left: Vec<String>, right: Vec<String> },
    #[error("evaluation failed: {0}")]
    Model(String),
    #[error("no progress for {cycles} cycles at time {at}: {detail}")]
    Deadlock { at: u64, cycles: u64, detail: String },
    #[error("mixed assignment: {0}")]
    Assignment(String),
}

/// Time unit of a level's trace.
pub fn time_unit(level: u8) -> &'static str {
    match level {
        0 | 1 => "ticks",
        2 => "local cycles",
        _ => "cycles",
    }
}
