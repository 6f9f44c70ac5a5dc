// SPDX-License-Identifier: Apache-2.0

//! Partition recognition on a validated model.
//!
//! Naming conventions carry the designer's partitioning:
//!
//! | prefix   | meaning                                              |
//! |----------|------------------------------------------------------|
//! | `SW_`    | software node; children are tasks                    |
//! | `HW_`    | hardware node; children are IPs                      |
//! | `TASK_`  | task inside a software node                          |
//! | `CHAN_`  | channel; `param topology`, `param depth`             |
//!
//! Blocks outside every node form the testbench. Links between different
//! tasks, hardware nodes or the testbench that do not pass through a `CHAN_`
//! get an implicit point-to-point channel of depth 1.

use std::collections::BTreeMap;
use std::fmt;

use crate::hwsynth::RtlLibrary;
use crate::model::{
    BlockKind, Diagnostic, FlatGraph, FlatKind, Item, ModelGraph, NodeId, ParamValue, Subsystem,
    ValidationReport, CHANNEL_PREFIX,
};

pub const SW_PREFIX: &str = "SW_";
pub const HW_PREFIX: &str = "HW_";
pub const TASK_PREFIX: &str = "TASK_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeRole {
    Software,
    Hardware,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub role: NodeRole,
    pub scope: usize,
    /// Task indices (software) or IP indices (hardware).
    pub members: Vec<usize>,
    pub line: usize,
    seq: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub id: String,
    pub node: usize,
    pub blocks: Vec<NodeId>,
    /// `None` when the task is a single block placed directly in the node.
    pub scope: Option<usize>,
    pub line: usize,
    seq: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ip {
    pub id: String,
    pub node: usize,
    pub blocks: Vec<NodeId>,
    pub scope: Option<usize>,
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Topology {
    PointToPoint,
    Multipoint,
    Network,
}

impl Topology {
    pub fn parse(s: &str) -> Option<Topology> {
        match s {
            "point_to_point" => Some(Topology::PointToPoint),
            "multipoint" => Some(Topology::Multipoint),
            "network" => Some(Topology::Network),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Topology::PointToPoint => "point_to_point",
            Topology::Multipoint => "multipoint",
            Topology::Network => "network",
        }
    }
}

/// A node port: `(flat node, port index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PortRef {
    pub node: NodeId,
    pub port: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSpec {
    pub id: String,
    pub topology: Topology,
    pub fifo_depth: usize,
    /// The `CHAN_` flat node, for declared channels.
    pub flat_node: Option<NodeId>,
    /// Producer output ports, in link order.
    pub producers: Vec<PortRef>,
    /// Consumer input ports, in link order.
    pub consumers: Vec<PortRef>,
    /// Per-consumer routing addresses (network topology only).
    pub addresses: Vec<u32>,
    /// Declared topology string when it did not parse.
    pub bad_topology: Option<String>,
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Owner {
    Task(usize),
    Ip(usize),
    Channel(usize),
    Testbench,
}

/// The concurrent units that exchange data at levels 1 and above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Actor {
    Task(usize),
    /// A whole hardware node; its IPs share one datapath.
    Hw(usize),
    /// A single testbench node (block, model input or model output).
    Testbench(NodeId),
}

/// One runtime queue: a channel delivery to one consumer, or a testbench wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fifo {
    pub channel: Option<usize>,
    /// Flat edge delivering into `dst`.
    pub edge: usize,
    pub src: PortRef,
    pub dst: PortRef,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SendPoint {
    /// Flat edge leaving the producer.
    pub edge: usize,
    pub src: PortRef,
    pub fifos: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActorIo {
    pub inbound: Vec<usize>,
    pub outbound: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TlmModel {
    pub base: ModelGraph,
    pub flat: FlatGraph,
    pub nodes: Vec<Node>,
    pub tasks: Vec<Task>,
    pub ips: Vec<Ip>,
    pub channels: Vec<ChannelSpec>,
    /// Testbench nodes, including model inputs and outputs, in flat order.
    pub testbench: Vec<NodeId>,
    /// Owner of each flat node.
    pub owner: Vec<Owner>,
    seq: Vec<usize>,
}

#[derive(Default, Clone, Copy)]
struct Ctx {
    node: Option<usize>,
    task: Option<usize>,
    ip: Option<usize>,
}

struct Recognizer<'a> {
    path_index: BTreeMap<&'a str, NodeId>,
    scope_index: BTreeMap<&'a str, usize>,
    nodes: Vec<Node>,
    tasks: Vec<Task>,
    ips: Vec<Ip>,
    owner: Vec<Owner>,
    seq: Vec<usize>,
    counter: usize,
}

fn join(prefix: &str, id: &str) -> String {
    if prefix.is_empty() {
        id.to_string()
    } else {
        format!("{prefix}.{id}")
    }
}

impl<'a> Recognizer<'a> {
    fn tick(&mut self) -> usize {
        self.counter += 1;
        self.counter
    }

    fn walk(&mut self, scope: &Subsystem, prefix: &str, ctx: Ctx) {
        for item in &scope.items {
            match item {
                Item::Block(b) => {
                    let path = join(prefix, &b.id);
                    let id = self.path_index[path.as_str()];
                    self.seq[id] = self.tick();
                    self.owner[id] = self.classify_block(id, &path, b.line, ctx);
                }
                Item::Subsystem(s) => {
                    let path = join(prefix, &s.id);
                    let scope_idx = self.scope_index[path.as_str()];
                    let mut inner = ctx;
                    if s.id.starts_with(CHANNEL_PREFIX) {
                        let id = self.path_index[path.as_str()];
                        self.seq[id] = self.tick();
                    } else if ctx.node.is_none()
                        && (s.id.starts_with(SW_PREFIX) || s.id.starts_with(HW_PREFIX))
                    {
                        let role =
                            if s.id.starts_with(SW_PREFIX) { NodeRole::Software } else { NodeRole::Hardware };
                        let seq = self.tick();
                        self.nodes.push(Node {
                            id: path.clone(),
                            role,
                            scope: scope_idx,
                            members: Vec::new(),
                            line: s.line,
                            seq,
                        });
                        inner.node = Some(self.nodes.len() - 1);
                    } else if let Some(n) = ctx.node {
                        let nested_node = s.id.starts_with(SW_PREFIX) || s.id.starts_with(HW_PREFIX);
                        match self.nodes[n].role {
                            NodeRole::Software if ctx.task.is_none() && !nested_node => {
                                inner.task = Some(self.new_task(n, path.clone(), Some(scope_idx), s.line));
                            }
                            NodeRole::Hardware if ctx.ip.is_none() && !nested_node => {
                                inner.ip = Some(self.new_ip(n, path.clone(), Some(scope_idx), s.line));
                            }
                            _ => {}
                        }
                    }
                    self.walk(s, &path, inner);
                }
                _ => {}
            }
        }
    }

    fn new_task(&mut self, node: usize, id: String, scope: Option<usize>, line: usize) -> usize {
        let seq = self.tick();
        self.tasks.push(Task { id, node, blocks: Vec::new(), scope, line, seq });
        let t = self.tasks.len() - 1;
        self.nodes[node].members.push(t);
        t
    }

    fn new_ip(&mut self, node: usize, id: String, scope: Option<usize>, line: usize) -> usize {
        self.ips.push(Ip { id, node, blocks: Vec::new(), scope, line });
        let i = self.ips.len() - 1;
        self.nodes[node].members.push(i);
        i
    }

    fn classify_block(&mut self, id: NodeId, path: &str, line: usize, ctx: Ctx) -> Owner {
        if let Some(t) = ctx.task {
            self.tasks[t].blocks.push(id);
            return Owner::Task(t);
        }
        if let Some(i) = ctx.ip {
            self.ips[i].blocks.push(id);
            return Owner::Ip(i);
        }
        match ctx.node {
            Some(n) if self.nodes[n].role == NodeRole::Software => {
                let t = self.new_task(n, path.to_string(), None, line);
                self.tasks[t].blocks.push(id);
                Owner::Task(t)
            }
            Some(n) => {
                let i = self.new_ip(n, path.to_string(), None, line);
                self.ips[i].blocks.push(id);
                Owner::Ip(i)
            }
            None => Owner::Testbench,
        }
    }
}

/// Classifies every element of `g` by partition role. Total: legality is
/// left to [`validate_partition`].
pub fn recognize_partition(g: &ModelGraph) -> TlmModel {
    let (flat, _) = FlatGraph::build(g);
    let n = flat.nodes.len();
    let (nodes, tasks, ips, mut owner, mut seq) = {
        let mut r = Recognizer {
            path_index: flat.nodes.iter().enumerate().map(|(i, n)| (n.path.as_str(), i)).collect(),
            scope_index: flat.scopes.iter().enumerate().map(|(i, s)| (s.path.as_str(), i)).collect(),
            nodes: Vec::new(),
            tasks: Vec::new(),
            ips: Vec::new(),
            owner: vec![Owner::Testbench; n],
            seq: vec![0; n],
            counter: g.inputs.len(),
        };
        r.walk(&g.root, "", Ctx::default());
        (r.nodes, r.tasks, r.ips, r.owner, r.seq)
    };
    // model inputs come first, outputs last
    let mut input_seq = 0;
    let last = seq.iter().copied().max().unwrap_or(0);
    let mut output_seq = last;
    for (i, node) in flat.nodes.iter().enumerate() {
        match node.kind {
            FlatKind::Input => {
                seq[i] = input_seq;
                input_seq += 1;
            }
            FlatKind::Output => {
                output_seq += 1;
                seq[i] = output_seq;
            }
            _ => {}
        }
    }

    let mut channels = Vec::new();
    for (id, node) in flat.nodes.iter().enumerate() {
        if node.kind != FlatKind::Channel {
            continue;
        }
        let scope = flat.scopes.iter().position(|s| s.path == node.path).expect("channel scope");
        let params = &flat.scopes[scope].params;
        let param = |k: &str| params.iter().find(|p| p.key == k).map(|p| &p.value);
        let (topology, bad_topology) = match param("topology") {
            None => (Topology::PointToPoint, None),
            Some(ParamValue::Str(s)) => match Topology::parse(s) {
                Some(t) => (t, None),
                None => (Topology::PointToPoint, Some(s.clone())),
            },
            Some(ParamValue::Int(v)) => (Topology::PointToPoint, Some(v.to_string())),
        };
        let fifo_depth = match param("depth") {
            Some(ParamValue::Int(d)) => usize::try_from(*d).unwrap_or(0),
            Some(ParamValue::Str(_)) => 0,
            None => 1,
        };
        let producers: Vec<PortRef> =
            flat.incoming(id).map(|e| PortRef { node: e.src, port: e.src_port }).collect();
        let consumers: Vec<PortRef> =
            flat.outgoing(id).map(|e| PortRef { node: e.dst, port: e.dst_port }).collect();
        let addresses = match topology {
            Topology::Network => (0..consumers.len() as u32).collect(),
            _ => Vec::new(),
        };
        owner[id] = Owner::Channel(channels.len());
        channels.push(ChannelSpec {
            id: node.path.clone(),
            topology,
            fifo_depth,
            flat_node: Some(id),
            producers,
            consumers,
            addresses,
            bad_topology,
            line: node.line,
        });
    }

    let testbench: Vec<NodeId> = (0..n).filter(|&i| owner[i] == Owner::Testbench).collect();
    let mut tlm = TlmModel { base: g.clone(), flat, nodes, tasks, ips, channels, testbench, owner, seq };

    let mut implicit = Vec::new();
    for (i, e) in tlm.flat.edges.iter().enumerate() {
        let (Some(a), Some(b)) = (tlm.actor_of(e.src), tlm.actor_of(e.dst)) else {
            continue;
        };
        let both_testbench = matches!((a, b), (Actor::Testbench(_), Actor::Testbench(_)));
        if a == b || both_testbench {
            continue;
        }
        implicit.push(ChannelSpec {
            id: tlm.edge_name(i),
            topology: Topology::PointToPoint,
            fifo_depth: 1,
            flat_node: None,
            producers: vec![PortRef { node: e.src, port: e.src_port }],
            consumers: vec![PortRef { node: e.dst, port: e.dst_port }],
            addresses: Vec::new(),
            bad_topology: None,
            line: e.line,
        });
    }
    tlm.channels.extend(implicit);
    tlm
}

impl TlmModel {
    /// The actor executing `node`, or `None` for channel nodes.
    pub fn actor_of(&self, node: NodeId) -> Option<Actor> {
        match self.owner[node] {
            Owner::Task(t) => Some(Actor::Task(t)),
            Owner::Ip(i) => Some(Actor::Hw(self.ips[i].node)),
            Owner::Testbench => Some(Actor::Testbench(node)),
            Owner::Channel(_) => None,
        }
    }

    /// All actors in declaration order.
    pub fn actors(&self) -> Vec<Actor> {
        let mut keyed: Vec<(usize, Actor)> = Vec::new();
        for &tb in &self.testbench {
            keyed.push((self.seq[tb], Actor::Testbench(tb)));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            keyed.push((t.seq, Actor::Task(i)));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.role == NodeRole::Hardware {
                keyed.push((n.seq, Actor::Hw(i)));
            }
        }
        keyed.sort();
        keyed.into_iter().map(|(_, a)| a).collect()
    }

    /// Flat nodes executed by `actor`.
    pub fn actor_members(&self, actor: Actor) -> Vec<NodeId> {
        match actor {
            Actor::Task(t) => self.tasks[t].blocks.clone(),
            Actor::Hw(n) => {
                let mut m: Vec<NodeId> =
                    self.nodes[n].members.iter().flat_map(|&i| self.ips[i].blocks.iter().copied()).collect();
                m.sort_unstable();
                m
            }
            Actor::Testbench(node) => vec![node],
        }
    }

    pub fn actor_name(&self, actor: Actor) -> String {
        match actor {
            Actor::Task(t) => self.tasks[t].id.clone(),
            Actor::Hw(n) => self.nodes[n].id.clone(),
            Actor::Testbench(node) => self.flat.nodes[node].path.clone(),
        }
    }

    /// Hardware node indices in declaration order.
    pub fn hw_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().enumerate().filter(|(_, n)| n.role == NodeRole::Hardware).map(|(i, _)| i)
    }

    pub fn sw_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().enumerate().filter(|(_, n)| n.role == NodeRole::Software).map(|(i, _)| i)
    }

    /// Runtime queues: one per channel consumer (channel order), then one per
    /// link between two distinct testbench nodes.
    pub fn fifos(&self) -> Vec<Fifo> {
        let mut out = Vec::new();
        for (c, ch) in self.channels.iter().enumerate() {
            let Some(&src) = ch.producers.first() else { continue };
            for &dst in &ch.consumers {
                let edge = self.edge_into(dst).expect("consumer is driven");
                out.push(Fifo { channel: Some(c), edge, src, dst, depth: ch.fifo_depth.max(1) });
            }
        }
        for (i, e) in self.flat.edges.iter().enumerate() {
            let (Some(a), Some(b)) = (self.actor_of(e.src), self.actor_of(e.dst)) else {
                continue;
            };
            if a != b && matches!((a, b), (Actor::Testbench(_), Actor::Testbench(_))) {
                out.push(Fifo {
                    channel: None,
                    edge: i,
                    src: PortRef { node: e.src, port: e.src_port },
                    dst: PortRef { node: e.dst, port: e.dst_port },
                    depth: 1,
                });
            }
        }
        out
    }

    /// Producer-side endpoints. A send through one of them pushes the same
    /// value into every listed FIFO.
    pub fn send_points(&self, fifos: &[Fifo]) -> Vec<SendPoint> {
        let mut out: Vec<SendPoint> = Vec::new();
        for (i, f) in fifos.iter().enumerate() {
            let edge = match f.channel.and_then(|c| self.channels[c].flat_node) {
                Some(chan) => self
                    .flat
                    .edges
                    .iter()
                    .position(|e| e.dst == chan && e.src == f.src.node && e.src_port == f.src.port)
                    .expect("producer edge"),
                None => f.edge,
            };
            match out.iter_mut().find(|s| s.edge == edge) {
                Some(s) => s.fifos.push(i),
                None => out.push(SendPoint { edge, src: f.src, fifos: vec![i] }),
            }
        }
        out.sort_by_key(|s| s.edge);
        out
    }

    fn edge_into(&self, dst: PortRef) -> Option<usize> {
        self.flat.edges.iter().position(|e| e.dst == dst.node && e.dst_port == dst.port)
    }

    /// FIFOs read and send points written by `actor`, in index order.
    pub fn actor_io(&self, actor: Actor, fifos: &[Fifo], sends: &[SendPoint]) -> ActorIo {
        let members = self.actor_members(actor);
        ActorIo {
            inbound: (0..fifos.len()).filter(|&i| members.contains(&fifos[i].dst.node)).collect(),
            outbound: (0..sends.len()).filter(|&i| members.contains(&sends[i].src.node)).collect(),
        }
    }

    /// Stable name of a flat edge, `src.port->dst.port`.
    pub fn edge_name(&self, edge: usize) -> String {
        let e = &self.flat.edges[edge];
        format!(
            "{}.{}->{}.{}",
            self.flat.nodes[e.src].path,
            self.flat.port_name(e.src, e.src_port, true),
            self.flat.nodes[e.dst].path,
            self.flat.port_name(e.dst, e.dst_port, false)
        )
    }

    /// Observed trace ports: model outputs and sinks, in flat order.
    pub fn observed(&self) -> Vec<NodeId> {
        (0..self.flat.nodes.len()).filter(|&i| self.flat.nodes[i].kind.is_observed()).collect()
    }

    /// Number of real blocks (excluding model ports and channels).
    pub fn block_count(&self) -> usize {
        self.flat.nodes.iter().filter(|n| matches!(n.kind, FlatKind::Block(_))).count()
    }
}

impl fmt::Display for TlmModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.nodes {
            writeln!(f, "node {} {:?}", n.id, n.role)?;
        }
        for t in &self.tasks {
            writeln!(f, "task {} ({} blocks)", t.id, t.blocks.len())?;
        }
        for c in &self.channels {
            writeln!(f, "channel {} {} depth={}", c.id, c.topology.as_str(), c.fifo_depth)?;
        }
        Ok(())
    }
}

/// Partition legality checks.
pub fn validate_partition(t: &TlmModel, library: &RtlLibrary) -> ValidationReport {
    let mut report = ValidationReport::default();
    let flat = &t.flat;
    let is_node = |id: &str| id.starts_with(SW_PREFIX) || id.starts_with(HW_PREFIX);

    for (i, s) in flat.scopes.iter().enumerate() {
        let ancestors = flat.scope_ancestors(i);
        if is_node(&s.id) {
            if let Some(&outer) = ancestors.iter().rev().find(|&&a| is_node(&flat.scopes[a].id)) {
                report.push(Diagnostic::error(
                    s.line,
                    &s.path,
                    format!("node '{}' is nested inside node '{}'", s.id, flat.scopes[outer].path),
                ));
            }
        }
        if s.id.starts_with(TASK_PREFIX) {
            let in_sw = ancestors.iter().any(|&a| flat.scopes[a].id.starts_with(SW_PREFIX));
            if !in_sw {
                report.push(Diagnostic::error(s.line, &s.path, "task outside a software node"));
            }
        }
        if s.id.starts_with(CHANNEL_PREFIX) {
            let has_blocks = flat.nodes.iter().any(|n| n.scope == Some(i));
            if has_blocks {
                report.push(Diagnostic::error(s.line, &s.path, "channel subsystem must not contain blocks"));
            }
        }
    }

    for ch in &t.channels {
        if let Some(bad) = &ch.bad_topology {
            report.push(Diagnostic::error(ch.line, &ch.id, format!("unknown channel topology '{bad}'")));
        }
        if ch.fifo_depth == 0 {
            report.push(Diagnostic::error(ch.line, &ch.id, "channel depth must be a positive integer"));
        }
        let arity_ok = match ch.topology {
            Topology::PointToPoint => ch.producers.len() == 1 && ch.consumers.len() == 1,
            Topology::Multipoint => ch.producers.len() == 1 && !ch.consumers.is_empty(),
            Topology::Network => {
                ch.producers.len() == 1
                    && !ch.consumers.is_empty()
                    && ch.addresses.len() == ch.consumers.len()
            }
        };
        if !arity_ok {
            report.push(Diagnostic::error(
                ch.line,
                &ch.id,
                format!(
                    "{} channel with {} producer(s) and {} consumer(s)",
                    ch.topology.as_str(),
                    ch.producers.len(),
                    ch.consumers.len()
                ),
            ));
        }
        for p in ch.producers.iter().chain(ch.consumers.iter()) {
            if flat.nodes[p.node].kind == FlatKind::Channel {
                report.push(Diagnostic::error(ch.line, &ch.id, "channel connected directly to a channel"));
            }
        }
        if let Some(src) = ch.producers.first().and_then(|p| t.actor_of(p.node)) {
            if ch.consumers.iter().any(|c| t.actor_of(c.node) == Some(src)) {
                report.push(Diagnostic::error(
                    ch.line,
                    &ch.id,
                    format!("channel loops back into '{}'", t.actor_name(src)),
                ));
            }
        }
    }

    for ip in &t.ips {
        for &b in &ip.blocks {
            if let FlatKind::Block(BlockKind::User(f)) = &flat.nodes[b].kind {
                if !library.has_user_function(f) {
                    report.push(Diagnostic::warning(
                        flat.nodes[b].line,
                        &flat.nodes[b].path,
                        format!("user function '{f}' has no RTL implementation; a controller will sequence it"),
                    ));
                }
            }
        }
    }

    if let Some(cycle) = actor_cycle(t) {
        let names: Vec<String> = cycle.iter().map(|&a| t.actor_name(a)).collect();
        report.push(
            Diagnostic::error(0, names[0].clone(), "feedback between partition elements is not supported")
                .with_cycle(names),
        );
    }

    report.sort();
    report
}

/// A directed cycle in the actor graph, if any.
fn actor_cycle(t: &TlmModel) -> Option<Vec<Actor>> {
    let actors = t.actors();
    let index: BTreeMap<Actor, usize> = actors.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); actors.len()];
    for f in t.fifos() {
        let (Some(a), Some(b)) = (t.actor_of(f.src.node), t.actor_of(f.dst.node)) else { continue };
        if a != b {
            succ[index[&a]].push(index[&b]);
        }
    }
    // colour-marking DFS
    let mut colour = vec![0u8; actors.len()];
    let mut parent = vec![usize::MAX; actors.len()];
    for root in 0..actors.len() {
        if colour[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        colour[root] = 1;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < succ[v].len() {
                let w = succ[v][*i];
                *i += 1;
                if colour[w] == 1 {
                    let mut cyc = vec![v];
                    let mut cur = v;
                    while cur != w {
                        cur = parent[cur];
                        cyc.push(cur);
                    }
                    cyc.reverse();
                    return Some(cyc.into_iter().map(|i| actors[i]).collect());
                }
                if colour[w] == 0 {
                    colour[w] = 1;
                    parent[w] = v;
                    stack.push((w, 0));
                }
            } else {
                colour[v] = 2;
                stack.pop();
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn tlm(src: &str) -> TlmModel {
        recognize_partition(&parse_model(src).unwrap())
    }

    const TWO_TASKS: &str = "model m { input x; output y;
        subsystem SW_cpu {
          subsystem TASK_parse { block g : gain(2); }
          subsystem TASK_emit { block h : gain(3); }
          link TASK_parse.g.out -> TASK_emit.h.in;
        }
        block src : gain(1);
        link x.out -> src.in; link src.out -> SW_cpu.TASK_parse.g.in; link SW_cpu.TASK_emit.h.out -> y.in; }";

    #[test]
    fn software_node_with_two_tasks() {
        let t = tlm(TWO_TASKS);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.nodes[0].role, NodeRole::Software);
        assert_eq!(t.tasks.len(), 2);
        let src = t.flat.node_by_path("src").unwrap();
        assert_eq!(t.owner[src], Owner::Testbench);
        // src->parse, parse->emit, emit->y
        assert_eq!(t.channels.len(), 3);
        assert!(validate_partition(&t, &RtlLibrary::default()).is_empty());
    }

    #[test]
    fn no_prefixed_subsystems_is_all_testbench() {
        let t = tlm("model m { input x; output y; subsystem S { block g : gain(2); }
                     link x.out -> S.g.in; link S.g.out -> y.in; }");
        assert!(t.nodes.is_empty());
        assert_eq!(t.testbench.len(), 3);
        assert!(t.channels.is_empty());
        assert_eq!(t.fifos().len(), 2);
    }

    #[test]
    fn nesting_is_reported() {
        let t = tlm("model m { subsystem HW_fir { subsystem SW_x { block g : const(1); } } }");
        let r = validate_partition(&t, &RtlLibrary::default());
        assert_eq!(r.len(), 1, "{r}");
        assert!(r.diagnostics[0].message.contains("nested"));
    }

    #[test]
    fn task_outside_software_node() {
        let t = tlm("model m { subsystem TASK_a { block g : const(1); block s : sink; link g.out -> s.in; } }");
        let r = validate_partition(&t, &RtlLibrary::default());
        assert_eq!(r.len(), 1);
        assert!(r.diagnostics[0].message.contains("task outside"));
    }

    #[test]
    fn point_to_point_with_two_consumers() {
        let t = tlm("model m { input x;
            subsystem CHAN_c { param topology = \"point_to_point\"; }
            block a : sink; block b : sink;
            link x.out -> CHAN_c.in; link CHAN_c.out -> a.in; link CHAN_c.out -> b.in; }");
        let r = validate_partition(&t, &RtlLibrary::default());
        assert_eq!(r.len(), 1, "{r}");
        assert!(r.diagnostics[0].message.contains("point_to_point channel with 1 producer(s) and 2"));
    }

    #[test]
    fn multipoint_channel_yields_fifo_per_consumer() {
        let t = tlm("model m { input x;
            subsystem CHAN_c { param topology = \"multipoint\"; param depth = 4; }
            block a : sink; block b : sink;
            link x.out -> CHAN_c.in; link CHAN_c.out -> a.in; link CHAN_c.out -> b.in; }");
        assert!(validate_partition(&t, &RtlLibrary::default()).is_empty());
        let f = t.fifos();
        assert_eq!(f.len(), 2);
        assert!(f.iter().all(|f| f.depth == 4 && f.channel == Some(0)));
        let sp = t.send_points(&f);
        assert_eq!(sp.len(), 1);
        assert_eq!(sp[0].fifos, vec![0, 1]);
    }

    #[test]
    fn unindexed_user_function_in_hardware_warns() {
        let t = tlm("model m { input x; output y; subsystem HW_h { block u : user(sq); }
                     link x.out -> HW_h.u.in; link HW_h.u.out -> y.in; }");
        let r = validate_partition(&t, &RtlLibrary::default());
        assert_eq!(r.len(), 1);
        assert_eq!(r.diagnostics[0].severity, crate::model::Severity::Warning);
    }

    #[test]
    fn feedback_between_tasks_rejected() {
        let t = tlm("model m { subsystem SW_c {
              subsystem TASK_a { block g : add; block k : const(1); link k.out -> g.a; }
              subsystem TASK_b { block d : delay(1); }
              link TASK_a.g.out -> TASK_b.d.in; link TASK_b.d.out -> TASK_a.g.b; } }");
        let r = validate_partition(&t, &RtlLibrary::default());
        assert!(r.iter().any(|d| d.message.contains("feedback")), "{r}");
    }

    #[test]
    fn recognition_is_total_and_idempotent() {
        let g = parse_model(TWO_TASKS).unwrap();
        let a = recognize_partition(&g);
        let b = recognize_partition(&a.base);
        assert_eq!(a, b);
        let task_blocks: usize = a.tasks.iter().map(|t| t.blocks.len()).sum();
        let ip_blocks: usize = a.ips.iter().map(|i| i.blocks.len()).sum();
        let non_channel = a.flat.nodes.iter().filter(|n| n.kind != FlatKind::Channel).count();
        assert_eq!(task_blocks + ip_blocks + a.testbench.len(), non_channel);
    }

    #[test]
    fn actors_follow_declaration_order() {
        let t = tlm(TWO_TASKS);
        let names: Vec<String> = t.actors().into_iter().map(|a| t.actor_name(a)).collect();
        assert_eq!(names, vec!["x", "SW_cpu.TASK_parse", "SW_cpu.TASK_emit", "src", "y"]);
    }
}
