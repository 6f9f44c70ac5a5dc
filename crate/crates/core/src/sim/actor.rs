// SPDX-License-Identifier: Apache-2.0

//! Functional actors: a compiled block program between FIFOs.

use crate::flow::Design;
use crate::model::{ExtIn, FlatKind, FnRegistry, Program, Sample, Tap};
use crate::tlm::Actor;

use super::fabric::{Fabric, Observer, Token};
use super::trace::Stimulus;
use super::SimError;

pub(crate) struct ProgramActor {
    pub name: String,
    prog: Program,
    /// Stimulus column per model input member.
    sources: Vec<Option<usize>>,
    inbound: Vec<usize>,
    outbound: Vec<usize>,
    /// Trace port per observed member.
    observe: Vec<usize>,
    pub fired: u64,
    pub limit: u64,
    inputs: Vec<Sample>,
    out: Vec<Sample>,
}

impl ProgramActor {
    pub fn new(
        d: &Design,
        actor: Actor,
        stim_cols: &[(String, Option<usize>)],
        obs: &Observer,
        limit: u64,
    ) -> Result<ProgramActor, SimError> {
        let t = &d.tlm;
        let members = t.actor_members(actor);
        let io = t.actor_io(actor, &d.fifos, &d.sends);
        let mut ext = Vec::new();
        let mut sources = Vec::new();
        for &m in &members {
            if matches!(t.flat.nodes[m].kind, FlatKind::Input) {
                ext.push(ExtIn::Source(m));
                let path = &t.flat.nodes[m].path;
                sources.push(stim_cols.iter().find(|(n, _)| n == path).and_then(|c| c.1));
            }
        }
        ext.extend(io.inbound.iter().map(|&f| ExtIn::Port(d.fifos[f].dst.node, d.fifos[f].dst.port)));
        let mut taps: Vec<Tap> = io.outbound.iter().map(|&s| Tap::Out(d.sends[s].src.node, d.sends[s].src.port)).collect();
        let mut observe = Vec::new();
        for &m in &members {
            if t.flat.nodes[m].kind.is_observed() {
                taps.push(Tap::In(m, 0));
                observe.push(obs.port(&t.flat.nodes[m].path));
            }
        }
        let prog = Program::compile(&t.flat, &members, &ext, &taps).map_err(|e| SimError::Model(e.to_string()))?;
        Ok(ProgramActor {
            name: t.actor_name(actor),
            prog,
            sources,
            inbound: io.inbound,
            outbound: io.outbound,
            observe,
            fired: 0,
            limit,
            inputs: Vec::new(),
            out: Vec::new(),
        })
    }

    pub fn done(&self) -> bool {
        self.fired >= self.limit
    }

    pub fn ready(&self, fab: &Fabric) -> bool {
        !self.done()
            && self.inbound.iter().all(|&f| fab.can_pop(f))
            && self.outbound.iter().all(|&s| fab.can_send(s))
    }

    /// Fires once, taking one token from every inbound FIFO. With `stamped`
    /// the clock merges token stamps and advances by `cost`.
    pub fn fire(
        &mut self,
        fab: &mut Fabric,
        stim: &Stimulus,
        reg: &FnRegistry,
        obs: &mut Observer,
        clock: &mut u64,
        cost: u64,
        stamped: bool,
    ) -> Result<(), SimError> {
        self.inputs.clear();
        for &c in &self.sources {
            self.inputs.push(c.map_or(0, |c| stim.value(c, self.fired)));
        }
        for &f in &self.inbound {
            let tok = fab.pop(f);
            if stamped {
                *clock = (*clock).max(tok.stamp);
            }
            self.inputs.push(tok.value);
        }
        self.prog.fire_into(&self.inputs, reg, &mut self.out).map_err(|e| SimError::Model(e.to_string()))?;
        if stamped {
            *clock += cost;
        }
        for (i, &s) in self.outbound.iter().enumerate() {
            fab.send(s, Token { value: self.out[i], stamp: *clock });
        }
        let n = self.outbound.len();
        for (i, &p) in self.observe.iter().enumerate() {
            obs.record(p, *clock, self.out[n + i]);
        }
        self.fired += 1;
        Ok(())
    }
}
