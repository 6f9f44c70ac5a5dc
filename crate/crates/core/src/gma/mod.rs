// SPDX-License-Identifier: Apache-2.0

//! Macro-architecture generation: design tree, netlist, parameter sets and
//! per-task behaviors.

mod behavior;
mod netlist;
mod params;
mod tree;

use thiserror::Error;

pub use behavior::{
    exec_simple, gen_task_behavior, BehaviorEnv, BehaviorMode, Callee, LocalState, Stmt, TaskBehavior, Var,
};
pub use netlist::{emit_netlist, ColifNetlist, Dir, Module, ModuleKind, Net, Port};
pub use params::{attach_params, emit_param_templates, ModuleParams, ParamSet, PortParams, Provenance, ReadError};
pub use tree::{build_tree, DesignTree, TreeNode, TreeRole};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GmaError {
    #[error("module '{module}': missing parameter '{key}'")]
    MissingParam { module: String, key: String },
    #[error("module '{module}': unknown parameter '{key}'")]
    UnknownParam { module: String, key: String },
    #[error("module '{module}': parameter '{key}' expects {expected}, got '{value}'")]
    ParamType { module: String, key: String, expected: &'static str, value: String },
    #[error("no parameters for module '{0}'")]
    MissingModule(String),
    #[error("parameters given for unknown module '{0}'")]
    UnknownModule(String),
    #[error("{file}:{line}: {message}")]
    ParamSyntax { file: String, line: usize, message: String },
    #[error("task '{task}' calls unregistered function '{func}'")]
    UnknownFunction { task: String, func: String },
    #[error("no task '{0}'")]
    NoSuchTask(String),
    #[error("netlist: {0}")]
    Netlist(String),
}
