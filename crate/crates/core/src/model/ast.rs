// SPDX-License-Identifier: Apache-2.0

//! Hierarchical block-diagram representation as written in a `.fdm` file.

use std::fmt;

use super::block::BlockKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelGraph {
    pub name: String,
    /// Top-level scope. Its `id` equals the model name.
    pub root: Subsystem,
    pub inputs: Vec<PortDecl>,
    pub outputs: Vec<PortDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortDecl {
    pub name: String,
    pub width: u32,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub id: String,
    pub kind: BlockKind,
    pub width: u32,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamValue {
    Int(i64),
    Str(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Str(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub key: String,
    pub value: ParamValue,
    pub line: usize,
}

/// `path.port`, where `path` is relative to the scope declaring the link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub path: Vec<String>,
    pub port: String,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.path.join("."), self.port)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub src: Endpoint,
    pub dst: Endpoint,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Block(Block),
    Subsystem(Subsystem),
    Link(Link),
    Param(Param),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    pub id: String,
    pub items: Vec<Item>,
    pub line: usize,
}

impl Subsystem {
    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.items.iter().filter_map(|i| match i {
            Item::Block(b) => Some(b),
            _ => None,
        })
    }

    pub fn subsystems(&self) -> impl Iterator<Item = &Subsystem> {
        self.items.iter().filter_map(|i| match i {
            Item::Subsystem(s) => Some(s),
            _ => None,
        })
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.items.iter().filter_map(|i| match i {
            Item::Link(l) => Some(l),
            _ => None,
        })
    }

    pub fn params(&self) -> impl Iterator<Item = &Param> {
        self.items.iter().filter_map(|i| match i {
            Item::Param(p) => Some(p),
            _ => None,
        })
    }

    pub fn param(&self, key: &str) -> Option<&ParamValue> {
        self.params().find(|p| p.key == key).map(|p| &p.value)
    }

    /// Blocks in this scope and all nested scopes.
    pub fn block_count(&self) -> usize {
        self.blocks().count() + self.subsystems().map(Subsystem::block_count).sum::<usize>()
    }

    pub fn subsystem_count(&self) -> usize {
        self.subsystems().map(|s| 1 + s.subsystem_count()).sum()
    }

    pub fn link_count(&self) -> usize {
        self.links().count() + self.subsystems().map(Subsystem::link_count).sum::<usize>()
    }
}

impl ModelGraph {
    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.root.blocks()
    }

    pub fn subsystems(&self) -> impl Iterator<Item = &Subsystem> {
        self.root.subsystems()
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.root.links()
    }
}
