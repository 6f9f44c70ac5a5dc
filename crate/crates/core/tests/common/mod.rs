// SPDX-License-Identifier: Apache-2.0

//! Seeded model generators and independent oracles for the acceptance
//! suite.

#![allow(dead_code)]

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Where a block input comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Src {
    Input(usize),
    Block(usize),
}

#[derive(Debug, Clone)]
pub struct BlockSpec {
    pub kind: String,
    pub arity: usize,
    pub inputs: Vec<Src>,
    /// Latency from the oracle table below, not from the flow's library.
    pub latency: u32,
    pub multicycle: bool,
}

/// A hardware node: blocks in declaration order, feeding forward only.
#[derive(Debug, Clone)]
pub struct HwSpec {
    pub inputs: usize,
    pub blocks: Vec<BlockSpec>,
    pub outputs: Vec<Src>,
}

fn ceil_log2(n: u32) -> u32 {
    let mut bits = 0;
    while (1u32 << bits) < n {
        bits += 1;
    }
    bits
}

/// Pipelined block menu with latencies 0 through 4.
fn pipelined_block(r: &mut ChaCha8Rng) -> BlockSpec {
    let pick = r.gen_range(0..10);
    let (kind, arity, latency) = match pick {
        0 => ("add".to_string(), 2, 0),
        1 => ("sub".to_string(), 2, 0),
        2 => (format!("gain({})", r.gen_range(-3..=3)), 1, 0),
        3 => ("mul".to_string(), 2, 1),
        4 => (format!("quant({})", r.gen_range(1..=5)), 1, 1),
        5 => ("user(mix)".to_string(), 1, 2),
        6 => ("user(inc)".to_string(), 1, 1),
        7 => (format!("delay({})", r.gen_range(1..=3)), 1, 0),
        _ => {
            let taps = r.gen_range(1..=8u32);
            let coeffs: Vec<String> = (0..taps).map(|_| r.gen_range(-3..=3).to_string()).collect();
            (format!("fir({})", coeffs.join(", ")), 1, 1 + ceil_log2(taps))
        }
    };
    BlockSpec { kind, arity, inputs: vec![], latency, multicycle: false }
}

/// Block menu for controlled nodes; always includes a multicycle block.
fn controlled_block(r: &mut ChaCha8Rng) -> BlockSpec {
    match r.gen_range(0..3) {
        0 => BlockSpec { kind: "user(huff)".into(), arity: 1, inputs: vec![], latency: 3, multicycle: true },
        1 => {
            let n = r.gen_range(1..=4);
            let f = ["inc", "dbl", "neg"][r.gen_range(0..3)];
            BlockSpec { kind: format!("for_loop({n}, {f})"), arity: 1, inputs: vec![], latency: n, multicycle: true }
        }
        _ => pipelined_block(r),
    }
}

fn wire_dag(r: &mut ChaCha8Rng, inputs: usize, blocks: &mut [BlockSpec], n_out: usize) -> Vec<Src> {
    for i in 0..blocks.len() {
        let ins = (0..blocks[i].arity)
            .map(|_| {
                if i == 0 || r.gen_bool(0.3) {
                    Src::Input(r.gen_range(0..inputs))
                } else {
                    Src::Block(r.gen_range(0..i))
                }
            })
            .collect();
        blocks[i].inputs = ins;
    }
    let last = blocks.len() - 1;
    let mut outs = vec![Src::Block(last)];
    while outs.len() < n_out {
        outs.push(Src::Block(r.gen_range(0..blocks.len())));
    }
    outs
}

/// Acyclic node of pipelined IPs, at most `max_blocks` blocks.
pub fn pipelined_hw(r: &mut ChaCha8Rng, max_blocks: usize) -> HwSpec {
    let inputs = r.gen_range(1..=2);
    let n = r.gen_range(1..=max_blocks);
    let mut blocks: Vec<BlockSpec> = (0..n).map(|_| pipelined_block(r)).collect();
    let n_out = r.gen_range(1..=2);
    let outputs = wire_dag(r, inputs, &mut blocks, n_out);
    HwSpec { inputs, blocks, outputs }
}

/// Acyclic node with at least one multicycle IP.
pub fn controlled_hw(r: &mut ChaCha8Rng, max_blocks: usize) -> HwSpec {
    let inputs = r.gen_range(1..=2);
    let n = r.gen_range(1..=max_blocks);
    let mut blocks: Vec<BlockSpec> = (0..n).map(|_| controlled_block(r)).collect();
    if !blocks.iter().any(|b| b.multicycle) {
        let i = r.gen_range(0..n);
        blocks[i] = BlockSpec { kind: "user(huff)".into(), arity: 1, inputs: vec![], latency: 3, multicycle: true };
    }
    let outputs = wire_dag(r, inputs, &mut blocks, 1);
    HwSpec { inputs, blocks, outputs }
}

impl HwSpec {
    pub fn input_names(&self) -> Vec<String> {
        (0..self.inputs).map(|i| format!("x{i}")).collect()
    }

    /// Model with the blocks inside hardware node `HW_g`.
    pub fn to_model(&self) -> String {
        let mut s = String::from("model rnd {\n");
        for i in 0..self.inputs {
            writeln!(s, "  input x{i};").unwrap();
        }
        for o in 0..self.outputs.len() {
            writeln!(s, "  output y{o};").unwrap();
        }
        s.push_str("  subsystem HW_g {\n");
        for (i, b) in self.blocks.iter().enumerate() {
            writeln!(s, "    block b{i} : {};", b.kind).unwrap();
        }
        let ports = |b: &BlockSpec| -> Vec<&'static str> {
            match b.arity {
                1 => vec!["in"],
                _ => vec!["a", "b"],
            }
        };
        for (i, b) in self.blocks.iter().enumerate() {
            for (p, src) in ports(b).into_iter().zip(&b.inputs) {
                if let Src::Block(j) = src {
                    writeln!(s, "    link b{j}.out -> b{i}.{p};").unwrap();
                }
            }
        }
        s.push_str("  }\n");
        for (i, b) in self.blocks.iter().enumerate() {
            for (p, src) in ports(b).into_iter().zip(&b.inputs) {
                if let Src::Input(k) = src {
                    writeln!(s, "  link x{k}.out -> HW_g.b{i}.{p};").unwrap();
                }
            }
        }
        for (o, src) in self.outputs.iter().enumerate() {
            let Src::Block(j) = src else { unreachable!("outputs come from blocks") };
            writeln!(s, "  link HW_g.b{j}.out -> y{o}.in;").unwrap();
        }
        s.push_str("}\n");
        s
    }

    /// Longest-path level of each block's output (memoized recursion over
    /// predecessors), with inputs at level 0.
    fn level(&self, b: usize, memo: &mut Vec<Option<u32>>) -> u32 {
        if let Some(l) = memo[b] {
            return l;
        }
        let arrive = self.blocks[b]
            .inputs
            .iter()
            .map(|s| match *s {
                Src::Input(_) => 0,
                Src::Block(j) => self.level(j, memo),
            })
            .max()
            .unwrap_or(0);
        let l = arrive + self.blocks[b].latency;
        memo[b] = Some(l);
        l
    }

    /// (k, total slack registers) for register balancing.
    pub fn slack_oracle(&self) -> (u32, u32) {
        let mut memo = vec![None; self.blocks.len()];
        let lv: Vec<u32> = (0..self.blocks.len()).map(|b| self.level(b, &mut memo)).collect();
        let src_level = |s: &Src| match *s {
            Src::Input(_) => 0,
            Src::Block(j) => lv[j],
        };
        let k = self.outputs.iter().map(src_level).max().unwrap_or(0);
        let mut regs = 0;
        for (b, plan) in self.blocks.iter().enumerate() {
            let need = lv[b] - plan.latency;
            regs += plan.inputs.iter().map(|s| need - src_level(s)).sum::<u32>();
        }
        regs += self.outputs.iter().map(|s| k - src_level(s)).sum::<u32>();
        (k, regs)
    }

    /// Controller initiation interval: sum of latencies, at least 1.
    pub fn ii_oracle(&self) -> u32 {
        self.blocks.iter().map(|b| b.latency).sum::<u32>().max(1)
    }
}

/// Flat testbench graph where feedback is allowed.
#[derive(Debug, Clone)]
pub struct LoopSpec {
    pub kinds: Vec<(String, usize)>,
    /// Driver of each input port: `None` is the model input.
    pub drivers: Vec<Vec<Option<usize>>>,
}

pub fn loop_graph(r: &mut ChaCha8Rng, max_blocks: usize) -> LoopSpec {
    let n = r.gen_range(1..=max_blocks);
    let menu: [(&str, usize); 5] = [("gain(2)", 1), ("add", 2), ("sub", 2), ("delay(1)", 1), ("user(inc)", 1)];
    let kinds: Vec<(String, usize)> = (0..n)
        .map(|_| {
            let (k, a) = *menu.choose(r).unwrap();
            (k.to_string(), a)
        })
        .collect();
    let drivers = kinds
        .iter()
        .map(|(_, a)| (0..*a).map(|_| if r.gen_bool(0.2) { None } else { Some(r.gen_range(0..n)) }).collect())
        .collect();
    LoopSpec { kinds, drivers }
}

impl LoopSpec {
    pub fn to_model(&self) -> String {
        let mut s = String::from("model lp {\n  input x;\n  output y;\n");
        for (i, (k, _)) in self.kinds.iter().enumerate() {
            writeln!(s, "  block n{i} : {k};").unwrap();
        }
        for (i, ds) in self.drivers.iter().enumerate() {
            let ports: &[&str] = if ds.len() == 1 { &["in"] } else { &["a", "b"] };
            for (p, d) in ports.iter().zip(ds) {
                match d {
                    Some(j) => writeln!(s, "  link n{j}.out -> n{i}.{p};").unwrap(),
                    None => writeln!(s, "  link x.out -> n{i}.{p};").unwrap(),
                }
            }
        }
        writeln!(s, "  link n{}.out -> y.in;", self.kinds.len() - 1).unwrap();
        s.push_str("}\n");
        s
    }

    fn is_delay(&self, i: usize) -> bool {
        self.kinds[i].0.starts_with("delay")
    }

    /// Every simple cycle through non-delay blocks, each as a sorted node
    /// set, found by exhaustive path search from its smallest node.
    pub fn delay_free_cycles(&self) -> Vec<Vec<usize>> {
        let n = self.kinds.len();
        let mut succ = vec![Vec::new(); n];
        for (dst, ds) in self.drivers.iter().enumerate() {
            for &src in ds.iter().flatten() {
                if !self.is_delay(src) && !self.is_delay(dst) && !succ[src].contains(&dst) {
                    succ[src].push(dst);
                }
            }
        }
        let mut found = Vec::new();
        for start in 0..n {
            let mut path = vec![start];
            walk(&succ, start, &mut path, &mut found);
        }
        found
    }
}

fn walk(succ: &[Vec<usize>], start: usize, path: &mut Vec<usize>, found: &mut Vec<Vec<usize>>) {
    let cur = *path.last().unwrap();
    for &nx in &succ[cur] {
        if nx == start {
            let mut c = path.clone();
            c.sort_unstable();
            found.push(c);
        } else if nx > start && !path.contains(&nx) {
            path.push(nx);
            walk(succ, start, path, found);
            path.pop();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// `TASK_` subsystem, or `IP_` subsystem in hardware.
    Named,
    /// Block placed directly in the node.
    Direct,
}

#[derive(Debug, Clone)]
pub struct Group {
    pub kind: GroupKind,
    pub blocks: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Testbench,
    Sw,
    Hw,
}

#[derive(Debug, Clone)]
pub struct Unit {
    pub kind: UnitKind,
    pub groups: Vec<Group>,
}

/// Endpoint of a link in a partitioned model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    In(usize),
    Out(usize),
    /// Block input port.
    Block(usize, usize),
    /// Block output.
    Src(usize),
    Chan(usize),
}

/// A partitioned model: units own contiguous block ranges and links only
/// run from lower to higher block index.
#[derive(Debug, Clone)]
pub struct PartSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub units: Vec<Unit>,
    pub kinds: Vec<(String, usize)>,
    pub channels: usize,
    pub links: Vec<(End, End)>,
}

/// Small menu used for netlist structure checks.
pub fn plain_block(r: &mut ChaCha8Rng) -> (String, usize) {
    let menu: [(&str, usize); 4] = [("gain(3)", 1), ("add", 2), ("user(inc)", 1), ("quant(3)", 1)];
    let (k, a) = *menu.choose(r).unwrap();
    (k.to_string(), a)
}

/// Wider menu with control flow, state and multicycle functions. Every
/// entry also has a hardware library mapping.
pub fn rich_block(r: &mut ChaCha8Rng) -> (String, usize) {
    let f = || ["inc", "neg", "clip8", "mix", "huff"];
    match r.gen_range(0..12) {
        0 => ("add".into(), 2),
        1 => ("sub".into(), 2),
        2 => ("mul".into(), 2),
        3 => (format!("gain({})", r.gen_range(-4..=4)), 1),
        4 => (format!("user({})", f()[r.gen_range(0..5)]), 1),
        5 => (format!("for_loop({}, {})", r.gen_range(1..=4), f()[r.gen_range(0..3)]), 1),
        6 => {
            let taps: Vec<String> = (0..r.gen_range(1..=4)).map(|_| r.gen_range(-3..=3).to_string()).collect();
            (format!("fir({})", taps.join(", ")), 1)
        }
        7 => (format!("quant({})", r.gen_range(1..=6)), 1),
        8 => (format!("delay({})", r.gen_range(1..=2)), 1),
        9 => ("if_else".into(), 3),
        10 => (format!("const({})", r.gen_range(-9..=9)), 0),
        _ => ("user(clip8)".into(), 1),
    }
}

/// Shape of a random partitioned model.
pub struct Shape {
    pub units: std::ops::RangeInclusive<usize>,
    pub kinds: &'static [UnitKind],
    pub block: fn(&mut ChaCha8Rng) -> (String, usize),
    /// Fraction of cross-actor links routed through a declared channel.
    pub chan: f64,
}

pub const NETLIST_SHAPE: Shape =
    Shape { units: 1..=5, kinds: &[UnitKind::Testbench, UnitKind::Sw, UnitKind::Hw], block: plain_block, chan: 0.3 };

pub fn partitioned(r: &mut ChaCha8Rng) -> PartSpec {
    partitioned_with(r, &NETLIST_SHAPE)
}

pub fn partitioned_with(r: &mut ChaCha8Rng, shape: &Shape) -> PartSpec {
    let inputs = r.gen_range(1..=2);
    let outputs = r.gen_range(1..=2);
    let mut units = Vec::new();
    let mut nb = 0;
    let mut take = |r: &mut ChaCha8Rng, lo: usize, hi: usize| {
        let n = r.gen_range(lo..=hi);
        let b: Vec<usize> = (nb..nb + n).collect();
        nb += n;
        b
    };
    for _ in 0..r.gen_range(shape.units.clone()) {
        let kind = *shape.kinds.choose(r).unwrap();
        let groups = if kind == UnitKind::Testbench {
            vec![Group { kind: GroupKind::Direct, blocks: take(r, 1, 1) }]
        } else {
            (0..r.gen_range(1..=3))
                .map(|_| {
                    if r.gen_bool(0.3) {
                        Group { kind: GroupKind::Direct, blocks: take(r, 1, 1) }
                    } else {
                        Group { kind: GroupKind::Named, blocks: take(r, 1, 3) }
                    }
                })
                .collect()
        };
        units.push(Unit { kind, groups });
    }
    let kinds: Vec<(String, usize)> = (0..nb).map(|_| (shape.block)(r)).collect();
    let mut plan = PartSpec { inputs, outputs, units, kinds, channels: 0, links: vec![] };
    let actor: Vec<(usize, usize)> = (0..nb).map(|b| plan.actor(b)).collect();
    for b in 0..nb {
        for p in 0..plan.kinds[b].1 {
            let dst = End::Block(b, p);
            if b == 0 || r.gen_bool(0.25) {
                plan.links.push((End::In(r.gen_range(0..inputs)), dst));
                continue;
            }
            let s = r.gen_range(0..b);
            if actor[s] != actor[b] && r.gen_bool(shape.chan) {
                let c = plan.channels;
                plan.channels += 1;
                plan.links.push((End::Src(s), End::Chan(c)));
                plan.links.push((End::Chan(c), dst));
            } else {
                plan.links.push((End::Src(s), dst));
            }
        }
    }
    for o in 0..outputs {
        let s = if o == 0 { nb - 1 } else { r.gen_range(0..nb) };
        plan.links.push((End::Src(s), End::Out(o)));
    }
    plan
}

impl PartSpec {
    /// (unit, group) holding block `b`.
    fn place(&self, b: usize) -> (usize, usize) {
        for (u, unit) in self.units.iter().enumerate() {
            for (g, grp) in unit.groups.iter().enumerate() {
                if grp.blocks.contains(&b) {
                    return (u, g);
                }
            }
        }
        unreachable!("every block is placed")
    }

    /// Concurrent unit executing block `b`: a task or a whole hardware node.
    fn actor(&self, b: usize) -> (usize, usize) {
        let (u, g) = self.place(b);
        match self.units[u].kind {
            UnitKind::Hw => (u, 0),
            _ => (u, g),
        }
    }

    fn path(&self, b: usize) -> String {
        let (u, g) = self.place(b);
        let unit = &self.units[u];
        let inner = match unit.groups[g].kind {
            GroupKind::Named if unit.kind == UnitKind::Sw => format!("TASK_t{g}.b{b}"),
            GroupKind::Named => format!("IP_p{g}.b{b}"),
            GroupKind::Direct => format!("b{b}"),
        };
        match unit.kind {
            UnitKind::Testbench => inner,
            UnitKind::Sw => format!("SW_s{u}.{inner}"),
            UnitKind::Hw => format!("HW_h{u}.{inner}"),
        }
    }

    fn end(&self, e: End) -> String {
        match e {
            End::In(i) => format!("x{i}.out"),
            End::Out(o) => format!("y{o}.in"),
            End::Chan(c) => format!("CHAN_c{c}"),
            End::Src(b) => format!("{}.out", self.path(b)),
            End::Block(b, p) => {
                let port = match (self.kinds[b].1, p) {
                    (1, _) => "in",
                    (2, 0) | (3, 1) => "a",
                    (3, 0) => "pred",
                    _ => "b",
                };
                format!("{}.{port}", self.path(b))
            }
        }
    }

    pub fn to_model(&self) -> String {
        let mut s = String::from("model pm {\n");
        for i in 0..self.inputs {
            writeln!(s, "  input x{i};").unwrap();
        }
        for o in 0..self.outputs {
            writeln!(s, "  output y{o};").unwrap();
        }
        for (u, unit) in self.units.iter().enumerate() {
            let decl = |b: usize| format!("block b{b} : {};", self.kinds[b].0);
            if unit.kind == UnitKind::Testbench {
                writeln!(s, "  {}", decl(unit.groups[0].blocks[0])).unwrap();
                continue;
            }
            let (pre, sub) = if unit.kind == UnitKind::Sw { ("SW_s", "TASK_t") } else { ("HW_h", "IP_p") };
            writeln!(s, "  subsystem {pre}{u} {{").unwrap();
            for (g, grp) in unit.groups.iter().enumerate() {
                match grp.kind {
                    GroupKind::Direct => writeln!(s, "    {}", decl(grp.blocks[0])).unwrap(),
                    GroupKind::Named => {
                        writeln!(s, "    subsystem {sub}{g} {{").unwrap();
                        for &b in &grp.blocks {
                            writeln!(s, "      {}", decl(b)).unwrap();
                        }
                        s.push_str("    }\n");
                    }
                }
            }
            s.push_str("  }\n");
        }
        for c in 0..self.channels {
            writeln!(s, "  subsystem CHAN_c{c} {{ }}").unwrap();
        }
        for &(a, b) in &self.links {
            let a = match a {
                End::Chan(c) => format!("CHAN_c{c}.out"),
                e => self.end(e),
            };
            let b = match b {
                End::Chan(c) => format!("CHAN_c{c}.in"),
                e => self.end(e),
            };
            writeln!(s, "  link {a} -> {b};").unwrap();
        }
        s.push_str("}\n");
        s
    }

    /// Module owning an endpoint: root, a task, an IP subsystem, a
    /// hardware node (for blocks placed directly in it) or a channel.
    fn module(&self, e: End) -> String {
        match e {
            End::In(_) | End::Out(_) => "root".into(),
            End::Chan(c) => format!("chan{c}"),
            End::Block(b, _) | End::Src(b) => {
                let (u, g) = self.place(b);
                match (self.units[u].kind, self.units[u].groups[g].kind) {
                    (UnitKind::Testbench, _) => "root".into(),
                    (UnitKind::Hw, GroupKind::Direct) => format!("node{u}"),
                    _ => format!("group{u}.{g}"),
                }
            }
        }
    }

    /// (modules, ports, nets) of the netlist by direct counting.
    pub fn netlist_counts(&self) -> (usize, usize, usize) {
        let groups: usize = self
            .units
            .iter()
            .filter(|u| u.kind != UnitKind::Testbench)
            .map(|u| {
                u.groups.iter().filter(|g| u.kind == UnitKind::Sw || g.kind == GroupKind::Named).count()
            })
            .sum();
        let nodes = self.units.iter().filter(|u| u.kind != UnitKind::Testbench).count();
        let modules = 1 + nodes + groups + self.channels;

        let mut ports: std::collections::BTreeSet<(String, String)> = std::collections::BTreeSet::new();
        for i in 0..self.inputs {
            ports.insert(("root".into(), format!("x{i}")));
        }
        for o in 0..self.outputs {
            ports.insert(("root".into(), format!("y{o}")));
        }
        let key = |e: End, side: &str| -> String {
            match e {
                End::In(i) => format!("x{i}"),
                End::Out(o) => format!("y{o}"),
                End::Chan(c) => format!("c{c}.{side}"),
                End::Block(b, p) => format!("b{b}.in{p}"),
                End::Src(b) => format!("b{b}.out"),
            }
        };
        let mut nets = 0;
        for &(a, b) in &self.links {
            let (ma, mb) = (self.module(a), self.module(b));
            if ma != mb {
                nets += 1;
                ports.insert((ma, key(a, "out")));
                ports.insert((mb, key(b, "in")));
            }
        }
        (modules, ports.len(), nets)
    }
}
