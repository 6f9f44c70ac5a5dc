// SPDX-License-Identifier: Apache-2.0

//! Compiled synchronous evaluation of a set of flat nodes.
//!
//! A [`Program`] fires once per tick: delay blocks emit their oldest sample,
//! every other node fires in topological order, then delays enqueue their
//! inputs. Boundary values enter through [`ExtIn`] slots and leave through
//! [`Tap`]s, so the same machinery serves whole-model simulation and
//! per-task / per-node firing.

use super::block::{delay_peek, delay_push, step_block_in_place, BlockState, FnRegistry, Sample};
use super::flat::{FlatGraph, FlatKind, NodeId};
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtIn {
    /// Input port of a member node fed from outside the member set.
    Port(NodeId, usize),
    /// Output of a member `Input` node, set from the stimulus.
    Source(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tap {
    /// Value produced on an output port of a member node.
    Out(NodeId, usize),
    /// Value arriving at an input port of a member node.
    In(NodeId, usize),
}

#[derive(Debug, Clone)]
enum Op {
    Source { ext: usize, out: usize },
    Identity { input: usize, out: usize },
    Block { node: NodeId, inputs: Vec<usize>, outputs: Vec<usize>, state: usize },
    DelayEmit { state: usize, out: usize },
    Nop,
}

#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    /// (state index, input slot) for end-of-tick delay updates.
    delay_updates: Vec<(usize, usize)>,
    kinds: Vec<super::block::BlockKind>,
    states: Vec<BlockState>,
    initial: Vec<BlockState>,
    slots: Vec<Sample>,
    ext_slots: Vec<usize>,
    taps: Vec<usize>,
    scratch: Vec<Sample>,
}

impl Program {
    pub fn compile(
        flat: &FlatGraph,
        members: &[NodeId],
        ext_in: &[ExtIn],
        taps: &[Tap],
    ) -> Result<Program, ModelError> {
        let order = flat.topo_order(members).ok_or(ModelError::AlgebraicLoop)?;
        let mut out_slot: Vec<Vec<usize>> = vec![Vec::new(); flat.nodes.len()];
        let mut n_slots = 0;
        for &m in members {
            let k = flat.nodes[m].kind.output_ports().len();
            out_slot[m] = (n_slots..n_slots + k).collect();
            n_slots += k;
        }
        let mut ext_slots = Vec::with_capacity(ext_in.len());
        let mut port_override: Vec<(NodeId, usize, usize)> = Vec::new();
        let mut source_ext: Vec<(NodeId, usize)> = Vec::new();
        for (i, e) in ext_in.iter().enumerate() {
            match *e {
                ExtIn::Port(n, p) => {
                    port_override.push((n, p, n_slots));
                    ext_slots.push(n_slots);
                    n_slots += 1;
                }
                ExtIn::Source(n) => {
                    let slot = *out_slot[n].first().ok_or_else(|| {
                        ModelError::Boundary(format!("'{}' is not a member source", flat.nodes[n].path))
                    })?;
                    source_ext.push((n, i));
                    ext_slots.push(slot);
                }
            }
        }
        let in_slot = |n: NodeId, p: usize| -> Result<usize, ModelError> {
            if let Some(&(_, _, s)) = port_override.iter().find(|&&(on, op, _)| on == n && op == p) {
                return Ok(s);
            }
            let e = flat
                .incoming(n)
                .find(|e| e.dst_port == p)
                .ok_or_else(|| ModelError::Boundary(format!("'{}' input {p} is undriven", flat.nodes[n].path)))?;
            out_slot[e.src].get(e.src_port).copied().ok_or_else(|| {
                ModelError::Boundary(format!(
                    "'{}' input {p} is driven from outside the member set",
                    flat.nodes[n].path
                ))
            })
        };

        let mut ops = Vec::with_capacity(order.len());
        let mut kinds = Vec::new();
        let mut states = Vec::new();
        let mut delay_updates = Vec::new();
        for &n in &order {
            let node = &flat.nodes[n];
            let op = match &node.kind {
                FlatKind::Input => match source_ext.iter().find(|(sn, _)| *sn == n) {
                    Some(&(_, ext)) => Op::Source { ext, out: out_slot[n][0] },
                    None => {
                        return Err(ModelError::Boundary(format!("input '{}' has no source", node.path)))
                    }
                },
                FlatKind::Channel => Op::Identity { input: in_slot(n, 0)?, out: out_slot[n][0] },
                FlatKind::Output => Op::Nop,
                FlatKind::Block(kind) => {
                    let state = states.len();
                    states.push(kind.initial_state());
                    kinds.push(kind.clone());
                    if kind.is_delay() {
                        delay_updates.push((state, in_slot(n, 0)?));
                        Op::DelayEmit { state, out: out_slot[n][0] }
                    } else {
                        let inputs = (0..kind.input_ports().len())
                            .map(|p| in_slot(n, p))
                            .collect::<Result<Vec<_>, _>>()?;
                        Op::Block { node: n, inputs, outputs: out_slot[n].clone(), state }
                    }
                }
            };
            ops.push(op);
        }
        let taps = taps
            .iter()
            .map(|t| match *t {
                Tap::Out(n, p) => out_slot[n]
                    .get(p)
                    .copied()
                    .ok_or_else(|| ModelError::Boundary(format!("no output {p} on '{}'", flat.nodes[n].path))),
                Tap::In(n, p) => in_slot(n, p),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Program {
            ops,
            delay_updates,
            initial: states.clone(),
            kinds,
            states,
            slots: vec![0; n_slots],
            ext_slots,
            taps,
            scratch: Vec::new(),
        })
    }

    pub fn num_inputs(&self) -> usize {
        self.ext_slots.len()
    }

    pub fn num_taps(&self) -> usize {
        self.taps.len()
    }

    pub fn reset(&mut self) {
        self.states = self.initial.clone();
        self.slots.iter_mut().for_each(|s| *s = 0);
    }

    /// Runs one tick and returns the tapped values in tap order.
    pub fn fire(&mut self, inputs: &[Sample], registry: &FnRegistry) -> Result<Vec<Sample>, ModelError> {
        let mut out = Vec::with_capacity(self.taps.len());
        self.fire_into(inputs, registry, &mut out)?;
        Ok(out)
    }

    pub fn fire_into(
        &mut self,
        inputs: &[Sample],
        registry: &FnRegistry,
        out: &mut Vec<Sample>,
    ) -> Result<(), ModelError> {
        if inputs.len() != self.ext_slots.len() {
            return Err(ModelError::Boundary(format!(
                "expected {} boundary inputs, got {}",
                self.ext_slots.len(),
                inputs.len()
            )));
        }
        for (slot, v) in self.ext_slots.iter().zip(inputs) {
            self.slots[*slot] = *v;
        }
        for op in &self.ops {
            match op {
                Op::Source { ext, out } => self.slots[*out] = inputs[*ext],
                Op::Identity { input, out } => self.slots[*out] = self.slots[*input],
                Op::DelayEmit { state, out } => self.slots[*out] = delay_peek(&self.states[*state]),
                Op::Block { inputs: ins, outputs, state, .. } => {
                    self.scratch.clear();
                    self.scratch.extend(ins.iter().map(|&s| self.slots[s]));
                    let res =
                        step_block_in_place(&self.kinds[*state], &self.scratch, &mut self.states[*state], registry)?;
                    for (slot, v) in outputs.iter().zip(res) {
                        self.slots[*slot] = v;
                    }
                }
                Op::Nop => {}
            }
        }
        for &(state, input) in &self.delay_updates {
            delay_push(&mut self.states[state], self.slots[input]);
        }
        out.clear();
        out.extend(self.taps.iter().map(|&t| self.slots[t]));
        Ok(())
    }

    /// Member nodes in firing order (for diagnostics and tests).
    pub fn block_nodes(&self) -> Vec<NodeId> {
        self.ops
            .iter()
            .filter_map(|o| match o {
                Op::Block { node, .. } => Some(*node),
                _ => None,
            })
            .collect()
    }
}
