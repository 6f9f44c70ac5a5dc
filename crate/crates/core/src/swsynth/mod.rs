// SPDX-License-Identifier: Apache-2.0

//! Software synthesis: task FSMs, the merged round-robin image, the memory
//! map and bus-level lowering.

mod exec;
mod fsm;
mod image;
mod lower;

use thiserror::Error;

pub use exec::{FsmEnv, FsmRun, Step};
pub use fsm::{build_task_fsm, Action, ApiLevel, Cond, Ctrl, TaskFsm, Transition};
pub use image::{merge_schedule, ImageRun, SoftwareImage};
pub use lower::{allocate_address_map, lower_api, AddrEntry, AddressMap, DATA_OFFSET, STATUS_OFFSET};

/// STATUS register: bit 0 set when the FIFO holds data.
pub const STATUS_NOT_EMPTY: u32 = 0;
/// STATUS register: bit 1 set when the FIFO has room.
pub const STATUS_NOT_FULL: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SwError {
    #[error("channel endpoint '{0}' has no address map entry")]
    Unmapped(String),
    #[error("address space exhausted: {0} endpoints")]
    AddressSpace(usize),
    #[error("netlist parameters are not bound")]
    Unbound,
    #[error("FSM for '{task}' is already at the micro level")]
    AlreadyLowered { task: String },
}
