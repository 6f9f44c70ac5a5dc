// SPDX-License-Identifier: Apache-2.0

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::fmt::Write as _;

use crate::model::{BlockKind, FlatKind, NodeId};
use crate::tlm::{Actor, NodeRole, TlmModel};

use super::library::{Eligibility, RtlLibrary};
use super::HwError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RtlKind {
    /// Primary input fed from the i-th inbound FIFO.
    Input,
    /// Primary output; see [`OutTarget`].
    Output,
    Ip(BlockKind),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutTarget {
    /// Send point index in the owning model.
    Send(usize),
    /// Observed trace port (a sink block).
    Observe(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtlNode {
    pub name: String,
    pub kind: RtlKind,
    pub rtl_name: String,
    pub latency: u32,
    pub eligibility: Eligibility,
    pub flat: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtlEdge {
    pub src: usize,
    pub src_port: usize,
    pub dst: usize,
    pub dst_port: usize,
    /// Balancing registers on this wire.
    pub regs: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtlGraph {
    pub name: String,
    pub nodes: Vec<RtlNode>,
    pub edges: Vec<RtlEdge>,
    /// Node indices of primary inputs, in inbound FIFO order.
    pub inputs: Vec<usize>,
    /// Node indices of primary outputs.
    pub outputs: Vec<usize>,
    pub out_targets: Vec<OutTarget>,
    /// Per-node level after delay correction.
    pub levels: Vec<u32>,
}

impl RtlGraph {
    pub fn new(name: impl Into<String>) -> RtlGraph {
        RtlGraph {
            name: name.into(),
            nodes: vec![],
            edges: vec![],
            inputs: vec![],
            outputs: vec![],
            out_targets: vec![],
            levels: vec![],
        }
    }

    pub fn add_input(&mut self) -> usize {
        let name = format!("in{}", self.inputs.len());
        self.nodes.push(RtlNode {
            name,
            kind: RtlKind::Input,
            rtl_name: "input".into(),
            latency: 0,
            eligibility: Eligibility::Pipelined,
            flat: None,
        });
        self.inputs.push(self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    pub fn add_output(&mut self, target: OutTarget, name: Option<String>) -> usize {
        let name = name.unwrap_or_else(|| format!("out{}", self.outputs.len()));
        self.nodes.push(RtlNode {
            name,
            kind: RtlKind::Output,
            rtl_name: "output".into(),
            latency: 0,
            eligibility: Eligibility::Pipelined,
            flat: None,
        });
        self.outputs.push(self.nodes.len() - 1);
        self.out_targets.push(target);
        self.nodes.len() - 1
    }

    pub fn add_ip(&mut self, name: impl Into<String>, kind: BlockKind, lib: &RtlLibrary, user_latency: Option<u32>) -> Result<usize, HwError> {
        let name = name.into();
        let entry = match lib.lookup(&kind) {
            Some(e) => e,
            None => match (&kind, user_latency) {
                (BlockKind::User(f), Some(l)) => RtlLibrary::user_fallback(f, l),
                _ => return Err(HwError::NoLatency(name)),
            },
        };
        self.nodes.push(RtlNode {
            name,
            kind: RtlKind::Ip(kind),
            rtl_name: entry.rtl_name,
            latency: entry.latency,
            eligibility: entry.eligibility,
            flat: None,
        });
        Ok(self.nodes.len() - 1)
    }

    pub fn connect(&mut self, src: usize, src_port: usize, dst: usize, dst_port: usize) {
        self.edges.push(RtlEdge { src, src_port, dst, dst_port, regs: 0 });
    }

    pub fn ip_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| matches!(self.nodes[i].kind, RtlKind::Ip(_)))
    }

    pub fn is_delay(&self, v: usize) -> bool {
        matches!(&self.nodes[v].kind, RtlKind::Ip(k) if k.is_delay())
    }

    pub fn num_out_ports(&self, v: usize) -> usize {
        match &self.nodes[v].kind {
            RtlKind::Input => 1,
            RtlKind::Output => 0,
            RtlKind::Ip(k) => k.output_ports().len(),
        }
    }

    pub fn num_in_ports(&self, v: usize) -> usize {
        match &self.nodes[v].kind {
            RtlKind::Input => 0,
            RtlKind::Output => 1,
            RtlKind::Ip(k) => k.input_ports().len(),
        }
    }

    /// Topological order. With `break_delays`, edges into delay blocks are
    /// ignored. Ties go to the lower node index.
    pub fn topo_order(&self, break_delays: bool) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut succ = vec![Vec::new(); n];
        for e in &self.edges {
            if break_delays && self.is_delay(e.dst) {
                continue;
            }
            indeg[e.dst] += 1;
            succ[e.src].push(e.dst);
        }
        let mut heap: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(v)) = heap.pop() {
            order.push(v);
            for &w in &succ[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    heap.push(Reverse(w));
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Register insertion applies: every IP is pipelined and the graph has
    /// no feedback, even through delay blocks.
    pub fn pipelinable(&self) -> bool {
        self.nodes.iter().all(|v| v.eligibility == Eligibility::Pipelined) && self.topo_order(false).is_some()
    }

    pub fn register_count(&self) -> u32 {
        self.edges.iter().map(|e| e.regs).sum()
    }
}

/// Builds the RTL graph of hardware node `node`. `user_latency` supplies the
/// latency of user blocks missing from the library (the owning module's
/// `cost_cycles`).
pub fn map_rtl_library(
    t: &TlmModel,
    node: usize,
    lib: &RtlLibrary,
    user_latency: &dyn Fn(NodeId) -> Option<u32>,
) -> Result<RtlGraph, HwError> {
    let hw = &t.nodes[node];
    if hw.role != NodeRole::Hardware {
        return Err(HwError::NotHardware(hw.id.clone()));
    }
    let flat = &t.flat;
    let fifos = t.fifos();
    let sends = t.send_points(&fifos);
    let actor = Actor::Hw(node);
    let io = t.actor_io(actor, &fifos, &sends);
    let members = t.actor_members(actor);
    let mut g = RtlGraph::new(hw.id.clone());
    let rel = |p: &str| p.strip_prefix(&format!("{}.", hw.id)).unwrap_or(p).to_string();

    let mut rtl_of = vec![usize::MAX; flat.nodes.len()];
    let mut in_of: Vec<((usize, usize), usize)> = Vec::new();
    for &f in &io.inbound {
        let i = g.add_input();
        in_of.push(((fifos[f].dst.node, fifos[f].dst.port), i));
    }
    for &m in &members {
        let FlatKind::Block(kind) = &flat.nodes[m].kind else { continue };
        if *kind == BlockKind::Sink {
            let o = g.add_output(OutTarget::Observe(flat.nodes[m].path.clone()), Some(rel(&flat.nodes[m].path)));
            g.nodes[o].flat = Some(m);
            rtl_of[m] = o;
            continue;
        }
        let v = g.add_ip(rel(&flat.nodes[m].path), kind.clone(), lib, user_latency(m))?;
        g.nodes[v].flat = Some(m);
        rtl_of[m] = v;
    }
    for &m in &members {
        for p in 0..flat.nodes[m].kind.input_ports().len() {
            let (src, sp) = match in_of.iter().find(|(k, _)| *k == (m, p)) {
                Some(&(_, i)) => (i, 0),
                None => {
                    let e = flat.incoming(m).find(|e| e.dst_port == p).expect("validated: driven input");
                    (rtl_of[e.src], e.src_port)
                }
            };
            g.connect(src, sp, rtl_of[m], p);
        }
    }
    for &s in &io.outbound {
        let o = g.add_output(OutTarget::Send(s), None);
        g.connect(rtl_of[sends[s].src.node], sends[s].src.port, o, 0);
    }
    Ok(g)
}

/// Longest-path leveling with per-edge slack registers. All outputs are
/// aligned to the common latency `k`.
pub fn delay_correct(g: &RtlGraph) -> Result<(RtlGraph, u32), HwError> {
    if let Some(v) = g.nodes.iter().find(|v| v.eligibility != Eligibility::Pipelined) {
        return Err(HwError::Multicycle(v.name.clone()));
    }
    let order = g.topo_order(false).ok_or_else(|| HwError::Cycle(g.name.clone()))?;
    let mut level = vec![0u32; g.nodes.len()];
    for &v in &order {
        if g.nodes[v].kind == RtlKind::Output {
            continue;
        }
        let arrive = g.edges.iter().filter(|e| e.dst == v).map(|e| level[e.src]).max().unwrap_or(0);
        level[v] = arrive + g.nodes[v].latency;
    }
    let k = g
        .outputs
        .iter()
        .flat_map(|&o| g.edges.iter().filter(move |e| e.dst == o))
        .map(|e| level[e.src])
        .max()
        .unwrap_or(0);
    for &o in &g.outputs {
        level[o] = k;
    }
    let mut out = g.clone();
    for e in &mut out.edges {
        e.regs = level[e.dst] - g.nodes[e.dst].latency - level[e.src];
    }
    out.levels = level;
    Ok((out, k))
}

/// Sequencing controller for a node that cannot be balanced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Controller {
    /// IP firing order with each step's duration in cycles.
    pub steps: Vec<(usize, u32)>,
    pub ii: u32,
}

pub fn fsm_controller(g: &RtlGraph) -> Result<Controller, HwError> {
    let order = g.topo_order(true).ok_or_else(|| HwError::Cycle(g.name.clone()))?;
    let steps: Vec<(usize, u32)> = order
        .into_iter()
        .filter(|&v| matches!(g.nodes[v].kind, RtlKind::Ip(_)))
        .map(|v| (v, g.nodes[v].latency))
        .collect();
    let sum: u32 = steps.iter().map(|s| s.1).sum();
    Ok(Controller { steps, ii: sum.max(1) })
}

/// A synthesized hardware node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HwDesign {
    Pipelined { graph: RtlGraph, k: u32 },
    Controlled { graph: RtlGraph, controller: Controller },
}

impl HwDesign {
    /// Registers when possible, otherwise a controller.
    pub fn synthesize(g: &RtlGraph) -> Result<HwDesign, HwError> {
        if g.pipelinable() {
            let (graph, k) = delay_correct(g)?;
            Ok(HwDesign::Pipelined { graph, k })
        } else {
            Ok(HwDesign::Controlled { graph: g.clone(), controller: fsm_controller(g)? })
        }
    }

    pub fn graph(&self) -> &RtlGraph {
        match self {
            HwDesign::Pipelined { graph, .. } | HwDesign::Controlled { graph, .. } => graph,
        }
    }

    /// Cycles from accepting an input sample to presenting its result.
    pub fn latency(&self) -> u32 {
        match self {
            HwDesign::Pipelined { k, .. } => *k,
            HwDesign::Controlled { controller, .. } => controller.ii,
        }
    }

    /// `.rtl.txt` structural listing.
    pub fn to_text(&self) -> String {
        let g = self.graph();
        let mut s = format!("# hardware node {}\n", g.name);
        match self {
            HwDesign::Pipelined { k, .. } => writeln!(s, "latency k={k}").unwrap(),
            HwDesign::Controlled { controller, .. } => writeln!(s, "controller II={}", controller.ii).unwrap(),
        }
        for v in g.ip_nodes() {
            let n = &g.nodes[v];
            writeln!(s, "inst {} : {} latency={}", n.name, n.rtl_name, n.latency).unwrap();
            if let RtlKind::Ip(BlockKind::Delay(k)) = &n.kind {
                for r in 0..*k {
                    writeln!(s, "reg {}.q{r}", n.name).unwrap();
                }
            }
        }
        let pin = |v: usize, p: usize, out: bool| -> String {
            let n = &g.nodes[v];
            match &n.kind {
                RtlKind::Input | RtlKind::Output => n.name.clone(),
                RtlKind::Ip(k) => {
                    let ports = if out { k.output_ports() } else { k.input_ports() };
                    format!("{}.{}", n.name, ports[p])
                }
            }
        };
        for (i, e) in g.edges.iter().enumerate() {
            let mut prev = pin(e.src, e.src_port, true);
            for r in 0..e.regs {
                let name = format!("w{i}_r{r}");
                writeln!(s, "reg {name}").unwrap();
                writeln!(s, "wire {prev} -> {name}").unwrap();
                prev = name;
            }
            writeln!(s, "wire {prev} -> {}", pin(e.dst, e.dst_port, false)).unwrap();
        }
        if let HwDesign::Controlled { controller, .. } = self {
            for (i, (v, l)) in controller.steps.iter().enumerate() {
                writeln!(s, "step {i} fire {} cycles={l}", g.nodes[*v].name).unwrap();
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lib() -> RtlLibrary {
        RtlLibrary::default()
    }

    #[test]
    fn diamond_gets_two_registers() {
        // in -> A(fir 4 taps, L=3) -> join; in -> B(mul, L=1) -> join(add, L=0)
        let mut g = RtlGraph::new("d");
        let i = g.add_input();
        let a = g.add_ip("a", BlockKind::Fir(vec![1, 2, 3, 4]), &lib(), None).unwrap();
        let c = g.add_ip("c", BlockKind::Const(3), &lib(), None).unwrap();
        let b = g.add_ip("b", BlockKind::Mul, &lib(), None).unwrap();
        let j = g.add_ip("j", BlockKind::Add, &lib(), None).unwrap();
        let o = g.add_output(OutTarget::Send(0), None);
        g.connect(i, 0, a, 0);
        g.connect(i, 0, b, 0);
        g.connect(c, 0, b, 1);
        g.connect(a, 0, j, 0);
        g.connect(b, 0, j, 1);
        g.connect(j, 0, o, 0);
        assert_eq!((g.nodes[a].latency, g.nodes[b].latency), (3, 1));
        let (h, k) = delay_correct(&g).unwrap();
        assert_eq!(k, 3);
        let b_to_j = h.edges.iter().find(|e| e.src == b && e.dst == j).unwrap();
        assert_eq!(b_to_j.regs, 2);
        // the constant feeds b at level 0
        assert_eq!(h.register_count(), 2);
    }

    #[test]
    fn chain_and_zero_latency() {
        let mut g = RtlGraph::new("c");
        let i = g.add_input();
        let q = g.add_ip("q", BlockKind::Quant(4), &lib(), None).unwrap();
        let f = g.add_ip("f", BlockKind::Fir(vec![1, 1]), &lib(), None).unwrap();
        let o = g.add_output(OutTarget::Send(0), None);
        g.connect(i, 0, q, 0);
        g.connect(q, 0, f, 0);
        g.connect(f, 0, o, 0);
        let (h, k) = delay_correct(&g).unwrap();
        assert_eq!((k, h.register_count()), (3, 0));

        let mut z = RtlGraph::new("z");
        let i = z.add_input();
        let a = z.add_ip("g", BlockKind::Gain(2), &lib(), None).unwrap();
        let o = z.add_output(OutTarget::Send(0), None);
        z.connect(i, 0, a, 0);
        z.connect(a, 0, o, 0);
        let (h, k) = delay_correct(&z).unwrap();
        assert_eq!((k, h.register_count()), (0, 0));
    }

    #[test]
    fn controller_sum_rule() {
        let mut g = RtlGraph::new("s");
        let i = g.add_input();
        let a = g.add_ip("a", BlockKind::Fir(vec![1, 1]), &lib(), None).unwrap();
        let b = g.add_ip("b", BlockKind::Mul, &lib(), None).unwrap();
        let c = g.add_ip("c", BlockKind::User("huff".into()), &lib(), None).unwrap();
        let o = g.add_output(OutTarget::Send(0), None);
        g.connect(i, 0, a, 0);
        g.connect(a, 0, b, 0);
        g.connect(a, 0, b, 1);
        g.connect(b, 0, c, 0);
        g.connect(c, 0, o, 0);
        assert!(!g.pipelinable());
        assert!(matches!(delay_correct(&g), Err(HwError::Multicycle(_))));
        assert_eq!(fsm_controller(&g).unwrap().ii, 6);

        let mut one = RtlGraph::new("one");
        let i = one.add_input();
        let a = one.add_ip("a", BlockKind::Gain(1), &lib(), None).unwrap();
        one.connect(i, 0, a, 0);
        assert_eq!(fsm_controller(&one).unwrap().ii, 1);
    }

    #[test]
    fn unindexed_user_block_needs_latency() {
        let mut g = RtlGraph::new("u");
        assert_eq!(g.add_ip("u", BlockKind::User("sq".into()), &lib(), None), Err(HwError::NoLatency("u".into())));
        let v = g.add_ip("u", BlockKind::User("sq".into()), &lib(), Some(2)).unwrap();
        assert_eq!(g.nodes[v].latency, 2);
        assert_eq!(g.nodes[v].eligibility, Eligibility::MulticycleOnly);
    }

    #[test]
    fn listing_is_deterministic() {
        let mut g = RtlGraph::new("d");
        let i = g.add_input();
        let a = g.add_ip("a", BlockKind::Mul, &lib(), None).unwrap();
        let o = g.add_output(OutTarget::Send(0), None);
        g.connect(i, 0, a, 0);
        g.connect(i, 0, a, 1);
        g.connect(a, 0, o, 0);
        let d = HwDesign::synthesize(&g).unwrap();
        let text = d.to_text();
        assert!(text.starts_with("# hardware node d\nlatency k=1\ninst a : rtl_mul latency=1\n"), "{text}");
        assert_eq!(text, HwDesign::synthesize(&g).unwrap().to_text());
    }
}
