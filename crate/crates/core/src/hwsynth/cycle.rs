// SPDX-License-Identifier: Apache-2.0

//! Cycle-level simulation of a synthesized hardware node.
//!
//! Pipelined nodes are simulated structurally: every IP output stage and
//! every balancing register is a real storage element shifted once per
//! cycle. A global valid history gates state updates, so a stalled or idle
//! cycle leaves block state untouched. Controlled nodes evaluate the graph
//! once per accepted sample and present the result `II` cycles later.

use crate::model::{delay_peek, delay_push, step_block_in_place, BlockKind, BlockState, FnRegistry, Sample};

use super::graph::{HwDesign, RtlGraph, RtlKind};
use super::HwError;

/// Where an IP input comes from.
#[derive(Debug, Clone, Copy)]
enum Src {
    Wire(usize),
    Chain(usize),
}

#[derive(Debug, Clone)]
struct Chain {
    src: usize,
    regs: Vec<Sample>,
}

#[derive(Debug, Clone)]
struct Ip {
    kind: BlockKind,
    inputs: Vec<Src>,
    out_base: usize,
    latency: usize,
    /// Index into the valid history this IP samples its inputs at.
    fire_level: usize,
    state: BlockState,
    /// `latency` stages of `outputs` samples each, newest first.
    pipe: Vec<Sample>,
    /// Combinational result waiting to enter the pipe.
    staged: Vec<Sample>,
}

#[derive(Debug, Clone)]
enum Mode {
    Pipelined { k: usize, hist: Vec<bool> },
    Controlled { ii: u32, order: Vec<usize>, busy: Option<u32>, pending: Vec<Sample>, result: Vec<Sample> },
}

/// Outcome of one [`CycleSim::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwStep {
    Idle,
    Accepted,
}

#[derive(Debug, Clone)]
pub struct CycleSim {
    graph: RtlGraph,
    mode: Mode,
    ips: Vec<Ip>,
    /// IP indices in evaluation order.
    order: Vec<usize>,
    chains: Vec<Chain>,
    wires: Vec<Sample>,
    out_base: Vec<usize>,
    /// Source of each primary output.
    out_src: Vec<Src>,
    scratch: Vec<Sample>,
    pub cycles: u64,
}

fn eval_err(e: impl std::fmt::Display) -> HwError {
    HwError::Eval(e.to_string())
}

impl CycleSim {
    pub fn new(design: &HwDesign) -> CycleSim {
        let g = design.graph().clone();
        let n = g.nodes.len();
        let mut out_base = vec![0; n];
        let mut wires = 0;
        for (v, base) in out_base.iter_mut().enumerate() {
            *base = wires;
            wires += g.num_out_ports(v);
        }
        let pipelined = matches!(design, HwDesign::Pipelined { .. });
        let mut chains = Vec::new();
        let mut src_of = |e: &super::RtlEdge| -> Src {
            let w = out_base[e.src] + e.src_port;
            if pipelined && e.regs > 0 {
                chains.push(Chain { src: w, regs: vec![0; e.regs as usize] });
                Src::Chain(chains.len() - 1)
            } else {
                Src::Wire(w)
            }
        };
        let mut ips = Vec::new();
        let mut ip_of = vec![usize::MAX; n];
        for v in 0..n {
            let RtlKind::Ip(kind) = &g.nodes[v].kind else { continue };
            let mut inputs = vec![Src::Wire(0); g.num_in_ports(v)];
            for e in g.edges.iter().filter(|e| e.dst == v) {
                inputs[e.dst_port] = src_of(e);
            }
            let latency = if pipelined { g.nodes[v].latency as usize } else { 0 };
            let outs = g.num_out_ports(v);
            let level = g.levels.get(v).copied().unwrap_or(0) as usize;
            ip_of[v] = ips.len();
            ips.push(Ip {
                kind: kind.clone(),
                inputs,
                out_base: out_base[v],
                latency,
                fire_level: level.saturating_sub(latency),
                state: kind.initial_state(),
                pipe: vec![0; latency * outs],
                staged: vec![0; outs],
            });
        }
        let mut out_src = Vec::new();
        for &o in &g.outputs {
            let e = g.edges.iter().find(|e| e.dst == o).expect("output is driven");
            out_src.push(src_of(e));
        }
        let topo = g.topo_order(!pipelined).expect("synthesized graph is ordered");
        let order: Vec<usize> = topo.into_iter().filter(|&v| ip_of[v] != usize::MAX).map(|v| ip_of[v]).collect();
        let mode = match design {
            HwDesign::Pipelined { k, .. } => {
                // IPs off every output path may sit deeper than k.
                let depth = ips.iter().map(|ip| ip.fire_level).max().unwrap_or(0).max(*k as usize);
                Mode::Pipelined { k: *k as usize, hist: vec![false; depth] }
            }
            HwDesign::Controlled { controller, .. } => Mode::Controlled {
                ii: controller.ii,
                order: order.clone(),
                busy: None,
                pending: vec![0; g.outputs.len()],
                result: vec![0; g.outputs.len()],
            },
        };
        CycleSim {
            mode,
            ips,
            order,
            chains,
            wires: vec![0; wires],
            out_base,
            out_src,
            scratch: Vec::new(),
            cycles: 0,
            graph: g,
        }
    }

    pub fn graph(&self) -> &RtlGraph {
        &self.graph
    }

    pub fn num_inputs(&self) -> usize {
        self.graph.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.graph.outputs.len()
    }

    /// Whether a new input sample would be taken this cycle.
    pub fn ready_for_input(&self) -> bool {
        match &self.mode {
            Mode::Pipelined { .. } => true,
            Mode::Controlled { busy, .. } => matches!(busy, None | Some(1)),
        }
    }

    /// Whether this cycle presents a result on the primary outputs. The
    /// caller must not step while a due result cannot be delivered.
    pub fn output_due(&self, injecting: bool) -> bool {
        match &self.mode {
            Mode::Pipelined { k: 0, .. } => injecting,
            Mode::Pipelined { k, hist } => hist[k - 1],
            Mode::Controlled { busy, .. } => *busy == Some(1),
        }
    }

    /// Samples still inside the node.
    pub fn in_flight(&self) -> bool {
        match &self.mode {
            Mode::Pipelined { k, hist } => hist[..*k].iter().any(|&b| b),
            Mode::Controlled { busy, .. } => busy.is_some(),
        }
    }

    /// Controller output register; for a pipelined node the last values
    /// presented.
    pub fn output_register(&self) -> &[Sample] {
        match &self.mode {
            Mode::Controlled { result, .. } => result,
            Mode::Pipelined { .. } => &[],
        }
    }

    fn read(&self, s: Src) -> Sample {
        match s {
            Src::Wire(w) => self.wires[w],
            Src::Chain(c) => *self.chains[c].regs.last().expect("chain has registers"),
        }
    }

    /// Advances one cycle. Outputs presented this cycle are appended to
    /// `out` as `(output index, value)`.
    pub fn step(
        &mut self,
        input: Option<&[Sample]>,
        reg: &FnRegistry,
        out: &mut Vec<(usize, Sample)>,
    ) -> Result<HwStep, HwError> {
        self.cycles += 1;
        if let Some(x) = input {
            if x.len() != self.graph.inputs.len() {
                return Err(HwError::Eval(format!("expected {} inputs, got {}", self.graph.inputs.len(), x.len())));
            }
        }
        if matches!(self.mode, Mode::Pipelined { .. }) {
            self.step_pipelined(input, reg, out)
        } else {
            self.step_controlled(input, reg, out)
        }
    }

    fn step_pipelined(
        &mut self,
        input: Option<&[Sample]>,
        reg: &FnRegistry,
        out: &mut Vec<(usize, Sample)>,
    ) -> Result<HwStep, HwError> {
        let Mode::Pipelined { k, hist } = &self.mode else { unreachable!() };
        let k = *k;
        let valid_at = |lvl: usize, hist: &[bool]| if lvl == 0 { input.is_some() } else { hist[lvl - 1] };
        if let Some(x) = input {
            for (i, &v) in self.graph.inputs.iter().enumerate() {
                self.wires[self.out_base[v]] = x[i];
            }
        }
        let hist = hist.clone();
        let mut delay_pushes: Vec<(usize, Sample)> = Vec::new();
        for oi in 0..self.order.len() {
            let i = self.order[oi];
            let fire = valid_at(self.ips[i].fire_level, &hist);
            self.scratch.clear();
            for p in 0..self.ips[i].inputs.len() {
                let s = self.read(self.ips[i].inputs[p]);
                self.scratch.push(s);
            }
            let ip = &mut self.ips[i];
            if ip.kind.is_delay() {
                self.wires[ip.out_base] = delay_peek(&ip.state);
                if fire {
                    delay_pushes.push((i, self.scratch[0]));
                }
                continue;
            }
            let res = if fire {
                step_block_in_place(&ip.kind, &self.scratch, &mut ip.state, reg).map_err(eval_err)?
            } else {
                vec![0; ip.staged.len()]
            };
            if ip.latency == 0 {
                self.wires[ip.out_base..ip.out_base + res.len()].copy_from_slice(&res);
            } else {
                let w = ip.staged.len();
                let oldest = ip.pipe.len() - w;
                self.wires[ip.out_base..ip.out_base + w].copy_from_slice(&ip.pipe[oldest..]);
                ip.staged.copy_from_slice(&res);
            }
        }
        for (i, v) in delay_pushes {
            delay_push(&mut self.ips[i].state, v);
        }
        if valid_at(k, &hist) {
            for o in 0..self.out_src.len() {
                out.push((o, self.read(self.out_src[o])));
            }
        }
        // clock edge
        for c in 0..self.chains.len() {
            let v = self.wires[self.chains[c].src];
            let regs = &mut self.chains[c].regs;
            regs.rotate_right(1);
            regs[0] = v;
        }
        for ip in &mut self.ips {
            if ip.latency > 0 {
                let w = ip.staged.len();
                ip.pipe.rotate_right(w);
                ip.pipe[..w].copy_from_slice(&ip.staged);
            }
        }
        if let Mode::Pipelined { hist, .. } = &mut self.mode {
            if !hist.is_empty() {
                hist.rotate_right(1);
                hist[0] = input.is_some();
            }
        }
        Ok(if input.is_some() { HwStep::Accepted } else { HwStep::Idle })
    }

    /// One functional evaluation of the whole graph.
    fn evaluate(&mut self, x: &[Sample], reg: &FnRegistry) -> Result<Vec<Sample>, HwError> {
        for (i, &v) in self.graph.inputs.iter().enumerate() {
            self.wires[self.out_base[v]] = x[i];
        }
        let order = match &self.mode {
            Mode::Controlled { order, .. } => order.clone(),
            Mode::Pipelined { .. } => unreachable!(),
        };
        for &i in &order {
            if self.ips[i].kind.is_delay() {
                let ip = &self.ips[i];
                self.wires[ip.out_base] = delay_peek(&ip.state);
            }
        }
        for &i in &order {
            if self.ips[i].kind.is_delay() {
                continue;
            }
            self.scratch.clear();
            for p in 0..self.ips[i].inputs.len() {
                let s = self.read(self.ips[i].inputs[p]);
                self.scratch.push(s);
            }
            let ip = &mut self.ips[i];
            let res = step_block_in_place(&ip.kind, &self.scratch, &mut ip.state, reg).map_err(eval_err)?;
            self.wires[ip.out_base..ip.out_base + res.len()].copy_from_slice(&res);
        }
        for &i in &order {
            if self.ips[i].kind.is_delay() {
                let v = self.read(self.ips[i].inputs[0]);
                delay_push(&mut self.ips[i].state, v);
            }
        }
        Ok(self.out_src.iter().map(|&s| self.read(s)).collect())
    }

    fn step_controlled(
        &mut self,
        input: Option<&[Sample]>,
        reg: &FnRegistry,
        out: &mut Vec<(usize, Sample)>,
    ) -> Result<HwStep, HwError> {
        let Mode::Controlled { busy, .. } = &mut self.mode else { unreachable!() };
        match *busy {
            Some(1) => {
                *busy = None;
                if let Mode::Controlled { pending, result, .. } = &mut self.mode {
                    result.clone_from(pending);
                    out.extend(result.iter().copied().enumerate());
                }
            }
            Some(r) => *busy = Some(r - 1),
            None => {}
        }
        let idle = matches!(self.mode, Mode::Controlled { busy: None, .. });
        match input {
            Some(x) if idle => {
                let r = self.evaluate(x, reg)?;
                if let Mode::Controlled { busy, pending, ii, .. } = &mut self.mode {
                    *pending = r;
                    *busy = Some(*ii);
                }
                Ok(HwStep::Accepted)
            }
            Some(_) => Err(HwError::Eval("input offered while the controller is busy".into())),
            None => Ok(HwStep::Idle),
        }
    }
}
