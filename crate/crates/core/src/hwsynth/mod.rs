// SPDX-License-Identifier: Apache-2.0

//! Hardware synthesis: functional IPs to RTL IPs with delay correction.

mod cycle;
mod graph;
mod library;

use thiserror::Error;

pub use cycle::{CycleSim, HwStep};
pub use graph::{
    delay_correct, fsm_controller, map_rtl_library, Controller, HwDesign, OutTarget, RtlEdge, RtlGraph, RtlKind,
    RtlNode,
};
pub use library::{Eligibility, RtlLibrary, RtlLibraryEntry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HwError {
    #[error("rtl library: {0}")]
    Library(String),
    #[error("block '{0}' is a user function with no RTL implementation and no latency")]
    NoLatency(String),
    #[error("'{0}' is not a hardware node")]
    NotHardware(String),
    #[error("'{0}' is multicycle-only and cannot be balanced by registers")]
    Multicycle(String),
    #[error("hardware node '{0}' has a feedback loop")]
    Cycle(String),
    #[error("{0}")]
    Eval(String),
}
