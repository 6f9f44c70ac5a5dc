// SPDX-License-Identifier: Apache-2.0

use crate::model::{FlatKind, NodeId};
use crate::tlm::{NodeRole, Owner, TlmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TreeRole {
    Root,
    SwNode(usize),
    HwNode(usize),
    /// Declared `CHAN_` channel.
    Channel(usize),
    Task(usize),
    /// IP subsystem.
    Ip(usize),
    /// IP made of one block placed directly in a hardware node.
    IpBlock(usize),
    TestbenchBlock(NodeId),
}

impl TreeRole {
    /// Whether the element becomes a netlist module.
    pub fn is_module(&self) -> bool {
        !matches!(self, TreeRole::IpBlock(_) | TreeRole::TestbenchBlock(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    /// Local name, unique among siblings.
    pub name: String,
    pub role: TreeRole,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Database tree over a partitioned model. Index 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignTree {
    pub tlm: TlmModel,
    pub nodes: Vec<TreeNode>,
}

fn local_name(path: &str) -> String {
    path.rsplit('.').next().unwrap_or(path).to_string()
}

pub fn build_tree(t: &TlmModel) -> DesignTree {
    let mut nodes = vec![TreeNode { name: t.base.name.clone(), role: TreeRole::Root, parent: None, children: vec![] }];
    let add = |nodes: &mut Vec<TreeNode>, parent: usize, name: String, role: TreeRole| {
        nodes.push(TreeNode { name, role, parent: Some(parent), children: vec![] });
        let id = nodes.len() - 1;
        nodes[parent].children.push(id);
        id
    };
    for (i, n) in t.nodes.iter().enumerate() {
        let role = match n.role {
            NodeRole::Software => TreeRole::SwNode(i),
            NodeRole::Hardware => TreeRole::HwNode(i),
        };
        let id = add(&mut nodes, 0, n.id.replace('.', "_"), role);
        for &m in &n.members {
            let (name, role) = match n.role {
                NodeRole::Software => (local_name(&t.tasks[m].id), TreeRole::Task(m)),
                NodeRole::Hardware if t.ips[m].scope.is_some() => (local_name(&t.ips[m].id), TreeRole::Ip(m)),
                NodeRole::Hardware => (local_name(&t.ips[m].id), TreeRole::IpBlock(m)),
            };
            add(&mut nodes, id, name, role);
        }
    }
    for (c, ch) in t.channels.iter().enumerate() {
        if ch.flat_node.is_some() {
            add(&mut nodes, 0, ch.id.replace('.', "_"), TreeRole::Channel(c));
        }
    }
    for &tb in &t.testbench {
        if matches!(t.flat.nodes[tb].kind, FlatKind::Block(_)) {
            add(&mut nodes, 0, t.flat.nodes[tb].path.replace('.', "_"), TreeRole::TestbenchBlock(tb));
        }
    }
    DesignTree { tlm: t.clone(), nodes }
}

impl DesignTree {
    /// Dotted path from the root, root name included.
    pub fn path(&self, id: usize) -> String {
        let mut parts = vec![self.nodes[id].name.as_str()];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            parts.push(&self.nodes[p].name);
            cur = p;
        }
        parts.reverse();
        parts.join(".")
    }

    pub fn find(&self, role: TreeRole) -> Option<usize> {
        self.nodes.iter().position(|n| n.role == role)
    }

    /// The tree node whose module contains flat node `node`.
    pub fn module_of(&self, node: NodeId) -> usize {
        let t = &self.tlm;
        let role = match t.owner[node] {
            Owner::Task(i) => TreeRole::Task(i),
            Owner::Ip(i) if t.ips[i].scope.is_some() => TreeRole::Ip(i),
            Owner::Ip(i) => TreeRole::HwNode(t.ips[i].node),
            Owner::Channel(c) => TreeRole::Channel(c),
            Owner::Testbench => TreeRole::Root,
        };
        self.find(role).expect("every owner has a tree node")
    }

    /// Flat-node path prefix covered by the module at `id` (empty for root).
    pub fn scope_path(&self, id: usize) -> String {
        let t = &self.tlm;
        match self.nodes[id].role {
            TreeRole::Root | TreeRole::TestbenchBlock(_) => String::new(),
            TreeRole::SwNode(n) | TreeRole::HwNode(n) => t.nodes[n].id.clone(),
            TreeRole::Channel(c) => t.channels[c].id.clone(),
            TreeRole::Task(i) => t.tasks[i].id.clone(),
            TreeRole::Ip(i) | TreeRole::IpBlock(i) => t.ips[i].id.clone(),
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].children.is_empty() && i != 0)
    }
}
