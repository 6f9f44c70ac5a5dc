// SPDX-License-Identifier: Apache-2.0

//! Flattened view of a [`ModelGraph`]: one node per block, top-level port and
//! channel subsystem, with links resolved to node/port indices.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::ast::{Item, ModelGraph, Param, Subsystem};
use super::block::BlockKind;
use super::diag::Diagnostic;

pub type NodeId = usize;

/// Subsystems with this prefix are communication channels: identity nodes
/// with one `in` and one `out` port.
pub const CHANNEL_PREFIX: &str = "CHAN_";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlatKind {
    Block(BlockKind),
    /// Top-level model input, driven by the stimulus.
    Input,
    /// Top-level model output, observed in traces.
    Output,
    Channel,
}

impl FlatKind {
    pub fn input_ports(&self) -> Vec<String> {
        match self {
            FlatKind::Block(k) => k.input_ports(),
            FlatKind::Input => vec![],
            FlatKind::Output | FlatKind::Channel => vec!["in".into()],
        }
    }

    pub fn output_ports(&self) -> Vec<String> {
        match self {
            FlatKind::Block(k) => k.output_ports(),
            FlatKind::Output => vec![],
            FlatKind::Input | FlatKind::Channel => vec!["out".into()],
        }
    }

    pub fn block(&self) -> Option<&BlockKind> {
        match self {
            FlatKind::Block(k) => Some(k),
            _ => None,
        }
    }

    pub fn is_delay(&self) -> bool {
        self.block().is_some_and(BlockKind::is_delay)
    }

    /// Output ports and `sink` blocks are what traces record.
    pub fn is_observed(&self) -> bool {
        matches!(self, FlatKind::Output | FlatKind::Block(BlockKind::Sink))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatNode {
    /// Dotted path from the model root, e.g. `SW_cpu.TASK_a.g`.
    pub path: String,
    pub id: String,
    /// Index into [`FlatGraph::scopes`] of the owning subsystem (`None` = root).
    pub scope: Option<usize>,
    pub kind: FlatKind,
    pub width: u32,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatEdge {
    pub src: NodeId,
    pub src_port: usize,
    pub dst: NodeId,
    pub dst_port: usize,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatScope {
    pub path: String,
    pub id: String,
    pub parent: Option<usize>,
    pub params: Vec<Param>,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlatGraph {
    pub nodes: Vec<FlatNode>,
    pub edges: Vec<FlatEdge>,
    pub scopes: Vec<FlatScope>,
}

fn join(prefix: &str, id: &str) -> String {
    if prefix.is_empty() {
        id.to_string()
    } else {
        format!("{prefix}.{id}")
    }
}

impl FlatGraph {
    /// Flattens `g`, returning resolution diagnostics alongside the graph.
    pub fn build(g: &ModelGraph) -> (FlatGraph, Vec<Diagnostic>) {
        let mut fg = FlatGraph::default();
        for p in &g.inputs {
            fg.nodes.push(FlatNode {
                path: p.name.clone(),
                id: p.name.clone(),
                scope: None,
                kind: FlatKind::Input,
                width: p.width,
                line: p.line,
            });
        }
        fg.collect_nodes(&g.root, "", None);
        for p in &g.outputs {
            fg.nodes.push(FlatNode {
                path: p.name.clone(),
                id: p.name.clone(),
                scope: None,
                kind: FlatKind::Output,
                width: p.width,
                line: p.line,
            });
        }
        let index: BTreeMap<&str, NodeId> =
            fg.nodes.iter().enumerate().map(|(i, n)| (n.path.as_str(), i)).collect();
        let mut diags = Vec::new();
        let mut edges = Vec::new();
        collect_links(&g.root, "", &index, &fg.nodes, &mut edges, &mut diags);
        fg.edges = edges;
        (fg, diags)
    }

    fn collect_nodes(&mut self, scope: &Subsystem, prefix: &str, scope_idx: Option<usize>) {
        for item in &scope.items {
            match item {
                Item::Block(b) => self.nodes.push(FlatNode {
                    path: join(prefix, &b.id),
                    id: b.id.clone(),
                    scope: scope_idx,
                    kind: FlatKind::Block(b.kind.clone()),
                    width: b.width,
                    line: b.line,
                }),
                Item::Subsystem(s) => {
                    let path = join(prefix, &s.id);
                    self.scopes.push(FlatScope {
                        path: path.clone(),
                        id: s.id.clone(),
                        parent: scope_idx,
                        params: s.params().cloned().collect(),
                        line: s.line,
                    });
                    let idx = self.scopes.len() - 1;
                    if s.id.starts_with(CHANNEL_PREFIX) {
                        self.nodes.push(FlatNode {
                            path: path.clone(),
                            id: s.id.clone(),
                            scope: scope_idx,
                            kind: FlatKind::Channel,
                            width: 1,
                            line: s.line,
                        });
                    }
                    self.collect_nodes(s, &path, Some(idx));
                }
                _ => {}
            }
        }
    }

    pub fn node_by_path(&self, path: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.path == path)
    }

    pub fn incoming(&self, node: NodeId) -> impl Iterator<Item = &FlatEdge> {
        self.edges.iter().filter(move |e| e.dst == node)
    }

    pub fn outgoing(&self, node: NodeId) -> impl Iterator<Item = &FlatEdge> {
        self.edges.iter().filter(move |e| e.src == node)
    }

    /// Ancestor scope indices of `node`, innermost first.
    pub fn ancestors(&self, node: NodeId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.nodes[node].scope;
        while let Some(s) = cur {
            out.push(s);
            cur = self.scopes[s].parent;
        }
        out
    }

    pub fn scope_ancestors(&self, scope: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.scopes[scope].parent;
        while let Some(s) = cur {
            out.push(s);
            cur = self.scopes[s].parent;
        }
        out
    }

    pub fn port_name(&self, node: NodeId, port: usize, output: bool) -> String {
        let ports = if output {
            self.nodes[node].kind.output_ports()
        } else {
            self.nodes[node].kind.input_ports()
        };
        ports.get(port).cloned().unwrap_or_else(|| format!("p{port}"))
    }

    /// Topological order of `members` over edges whose endpoints are both
    /// members. Edges into delay blocks are ignored, so delays act as sources.
    /// Ties break by declaration order. Returns `None` on an algebraic loop.
    pub fn topo_order(&self, members: &[NodeId]) -> Option<Vec<NodeId>> {
        let mut is_member = vec![false; self.nodes.len()];
        for &m in members {
            is_member[m] = true;
        }
        let mut indeg = vec![0usize; self.nodes.len()];
        let mut succ: Vec<Vec<NodeId>> = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            if is_member[e.src] && is_member[e.dst] && !self.nodes[e.dst].kind.is_delay() {
                indeg[e.dst] += 1;
                succ[e.src].push(e.dst);
            }
        }
        let mut heap: BinaryHeap<Reverse<NodeId>> =
            members.iter().copied().filter(|&m| indeg[m] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(members.len());
        while let Some(Reverse(n)) = heap.pop() {
            order.push(n);
            for &s in &succ[n] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    heap.push(Reverse(s));
                }
            }
        }
        (order.len() == members.len()).then_some(order)
    }
}

fn collect_links(
    scope: &Subsystem,
    prefix: &str,
    index: &BTreeMap<&str, NodeId>,
    nodes: &[FlatNode],
    edges: &mut Vec<FlatEdge>,
    diags: &mut Vec<Diagnostic>,
) {
    for item in &scope.items {
        match item {
            Item::Link(l) => {
                let resolve = |ep: &super::ast::Endpoint, output: bool| -> Result<(NodeId, usize), String> {
                    let full = join(prefix, &ep.path.join("."));
                    let node = *index
                        .get(full.as_str())
                        .ok_or_else(|| format!("link endpoint '{ep}' does not name a block"))?;
                    let ports = if output {
                        nodes[node].kind.output_ports()
                    } else {
                        nodes[node].kind.input_ports()
                    };
                    let port = ports.iter().position(|p| *p == ep.port).ok_or_else(|| {
                        let dir = if output { "output" } else { "input" };
                        format!("'{}' has no {dir} port '{}'", full, ep.port)
                    })?;
                    Ok((node, port))
                };
                let src = resolve(&l.src, true);
                let dst = resolve(&l.dst, false);
                match (src, dst) {
                    (Ok((s, sp)), Ok((d, dp))) => {
                        if nodes[s].width != nodes[d].width {
                            diags.push(Diagnostic::error(
                                l.line,
                                join(prefix, &l.dst.to_string()),
                                format!(
                                    "width mismatch: {} bits driven by {} bits",
                                    nodes[d].width, nodes[s].width
                                ),
                            ));
                        }
                        edges.push(FlatEdge { src: s, src_port: sp, dst: d, dst_port: dp, line: l.line })
                    }
                    (s, d) => {
                        for msg in [s.err(), d.err()].into_iter().flatten() {
                            diags.push(Diagnostic::error(l.line, join(prefix, &l.src.to_string()), msg));
                        }
                    }
                }
            }
            Item::Subsystem(s) => {
                collect_links(s, &join(prefix, &s.id), index, nodes, edges, diags);
            }
            _ => {}
        }
    }
}
