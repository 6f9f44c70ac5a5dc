// SPDX-License-Identifier: Apache-2.0

//! The functional block-diagram language: syntax, validation and block
//! semantics.

mod ast;
mod block;
mod diag;
mod eval;
mod flat;
mod parse;
mod validate;

use thiserror::Error;

pub use ast::{Block, Endpoint, Item, Link, ModelGraph, Param, ParamValue, PortDecl, Subsystem};
pub use block::{
    delay_peek, delay_push, fold_loop, select_index, step_block, step_block_in_place, BlockFn, BlockKind,
    BlockState, FnRegistry, Sample,
};
pub use diag::{Diagnostic, Severity, ValidationReport};
pub use eval::{ExtIn, Program, Tap};
pub use flat::{FlatEdge, FlatGraph, FlatKind, FlatNode, FlatScope, NodeId, CHANNEL_PREFIX};
pub use parse::parse_model;
pub use validate::{algebraic_loops, validate_model};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError { line, col, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("function '{0}' is not registered")]
    UnknownFunction(String),
    #[error("{kind}: expected {expected} inputs, got {got}")]
    Arity { kind: String, expected: usize, got: usize },
    #[error("{0}: state does not match block kind")]
    StateShape(String),
    #[error("quant step of zero")]
    ZeroQuantStep,
    #[error("algebraic loop in evaluated node set")]
    AlgebraicLoop,
    #[error("boundary: {0}")]
    Boundary(String),
}
