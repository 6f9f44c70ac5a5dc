// SPDX-License-Identifier: Apache-2.0

//! Cycle-level engine: testbench, hardware nodes and processors advance on
//! one global clock. Processors reach FIFOs only over the shared bus.

use std::collections::BTreeMap;

use crate::flow::{Design, SwNode};
use crate::hwsynth::{CycleSim, OutTarget};
use crate::model::FnRegistry;
use crate::swsynth::{Action, ImageRun, SoftwareImage};
use crate::tlm::Actor;

use super::actor::ProgramActor;
use super::fabric::{Fabric, Observer, Token, TaskEnv};
use super::levels::{simulate, stimulus_columns, MacroProc, SimResult};
use super::trace::{Stimulus, Trace};
use super::SimError;

/// Cycles without FIFO or trace activity before the run is declared stuck.
const WATCHDOG: u64 = 200_000;

enum Target {
    Send(usize),
    Observe(usize),
}

struct HwComp {
    name: String,
    sim: CycleSim,
    inbound: Vec<usize>,
    targets: Vec<Target>,
    accepted: u64,
    limit: u64,
    inputs: Vec<i32>,
    out: Vec<(usize, i32)>,
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Idle,
    Compute { task: usize, tr: usize, until: u64 },
    BusWait { task: usize, tr: usize },
    Bus { task: usize, tr: usize, until: u64 },
}

struct MicroProc {
    name: String,
    image: SoftwareImage,
    run: ImageRun,
    cost: Vec<u64>,
    phase: Phase,
}

enum Comp {
    Func(ProgramActor),
    Hw(Box<HwComp>),
    Micro(Box<MicroProc>),
    Macro(Box<MacroProc>, u64),
}

struct Engine<'a> {
    fab: Fabric,
    obs: Observer,
    reg: &'a FnRegistry,
    stim: &'a Stimulus,
    bus_latency: u64,
    bus_until: u64,
}

impl HwComp {
    fn done(&self) -> bool {
        self.accepted >= self.limit && !self.sim.in_flight()
    }

    fn cycle(&mut self, e: &mut Engine, c: u64) -> Result<(), SimError> {
        let avail = self.accepted < self.limit
            && self.sim.ready_for_input()
            && self.inbound.iter().all(|&f| e.fab.can_pop(f));
        if self.sim.output_due(avail)
            && !self.targets.iter().all(|t| match t {
                Target::Send(s) => e.fab.can_send(*s),
                Target::Observe(_) => true,
            })
        {
            return Ok(());
        }
        self.inputs.clear();
        if avail {
            for &f in &self.inbound {
                self.inputs.push(e.fab.pop(f).value);
            }
            self.accepted += 1;
        }
        self.out.clear();
        let input = avail.then_some(self.inputs.as_slice());
        self.sim.step(input, e.reg, &mut self.out).map_err(|err| SimError::Model(format!("{}: {err}", self.name)))?;
        for &(o, v) in &self.out {
            match self.targets[o] {
                Target::Send(s) => e.fab.send(s, Token { value: v, stamp: c }),
                Target::Observe(p) => e.obs.record(p, c, v),
            }
        }
        Ok(())
    }
}

impl MicroProc {
    fn done(&self) -> bool {
        matches!(self.phase, Phase::Idle) && self.run.all_done()
    }

    fn fire(&mut self, e: &mut Engine, c: u64, task: usize, tr: usize) -> Result<(), SimError> {
        let map = self.image.address_map.as_ref();
        let mut env = TaskEnv { fab: &mut e.fab, obs: &mut e.obs, map, clock: c, stamped: false };
        self.run.runs[task]
            .fire(&self.image.fsms[task], tr, &mut env, e.reg)
            .map_err(|err| SimError::Model(format!("{}: {err}", self.name)))
    }

    fn cycle(&mut self, e: &mut Engine, c: u64) -> Result<(), SimError> {
        loop {
            match self.phase {
                Phase::Idle => {
                    let env = TaskEnv { fab: &mut e.fab, obs: &mut e.obs, map: None, clock: c, stamped: false };
                    let Some((task, tr)) = self.run.next_enabled(&self.image, &env) else { return Ok(()) };
                    let t = &self.image.fsms[task].transitions[tr];
                    let cost = if t.has_compute() { self.cost[task] } else { 0 };
                    self.phase = Phase::Compute { task, tr, until: c + 1 + cost };
                    return Ok(());
                }
                Phase::Compute { until, .. } if c < until => return Ok(()),
                Phase::Compute { task, tr, .. } => {
                    if self.image.fsms[task].transitions[tr].actions.iter().any(Action::is_bus) {
                        self.phase = Phase::BusWait { task, tr };
                    } else {
                        self.fire(e, c, task, tr)?;
                        self.phase = Phase::Idle;
                    }
                }
                Phase::BusWait { task, tr } => {
                    if e.bus_until > c {
                        return Ok(());
                    }
                    e.bus_until = c + e.bus_latency;
                    self.phase = Phase::Bus { task, tr, until: e.bus_until };
                    return Ok(());
                }
                Phase::Bus { until, .. } if c < until => return Ok(()),
                Phase::Bus { task, tr, .. } => {
                    self.fire(e, c, task, tr)?;
                    self.phase = Phase::Idle;
                }
            }
        }
    }
}

fn hw_comp(d: &Design, node: usize, obs: &Observer, ticks: u64) -> HwComp {
    let h = d.hw.iter().find(|h| h.node == node).expect("synthesized hardware node");
    let io = d.tlm.actor_io(Actor::Hw(node), &d.fifos, &d.sends);
    let sim = CycleSim::new(&h.design);
    let targets = sim
        .graph()
        .out_targets
        .iter()
        .map(|t| match t {
            OutTarget::Send(s) => Target::Send(*s),
            OutTarget::Observe(p) => Target::Observe(obs.port(p)),
        })
        .collect();
    HwComp {
        name: d.tlm.nodes[node].id.clone(),
        sim,
        inbound: io.inbound,
        targets,
        accepted: 0,
        limit: ticks,
        inputs: Vec::new(),
        out: Vec::new(),
    }
}

fn micro_proc(d: &Design, sw: &SwNode, ticks: u64) -> MicroProc {
    MicroProc {
        name: d.tlm.nodes[sw.node].id.clone(),
        run: ImageRun::new(&sw.micro_image, Some(ticks)),
        image: sw.micro_image.clone(),
        cost: sw.tasks.iter().map(|&t| u64::from(d.task_cost[t])).collect(),
        phase: Phase::Idle,
    }
}

/// Runs the cycle-level engine. Nodes flagged in `macro_nodes` run at the
/// macro level instead.
pub(crate) fn level3(
    d: &Design,
    stim: &Stimulus,
    ticks: u64,
    macro_nodes: Option<&[bool]>,
) -> Result<(Trace, u64), SimError> {
    let cols = stimulus_columns(d, stim)?;
    let obs = Observer::new(d.observed_ports());
    let is_macro = |n: usize| macro_nodes.is_some_and(|m| m[n]);
    let mut comps = Vec::new();
    let mut placed = vec![false; d.tlm.nodes.len()];
    for a in d.tlm.actors() {
        match a {
            Actor::Testbench(_) => comps.push(Comp::Func(ProgramActor::new(d, a, &cols, &obs, ticks)?)),
            Actor::Hw(n) if is_macro(n) => comps.push(Comp::Func(ProgramActor::new(d, a, &cols, &obs, ticks)?)),
            Actor::Hw(n) => comps.push(Comp::Hw(Box::new(hw_comp(d, n, &obs, ticks)))),
            Actor::Task(t) => {
                let n = d.tlm.tasks[t].node;
                if std::mem::replace(&mut placed[n], true) {
                    continue;
                }
                let sw = d.sw.iter().find(|s| s.node == n).expect("software node");
                if is_macro(n) {
                    comps.push(Comp::Macro(Box::new(MacroProc::new(d, sw, ticks)), 0));
                } else {
                    comps.push(Comp::Micro(Box::new(micro_proc(d, sw, ticks))));
                }
            }
        }
    }
    let mut e = Engine {
        fab: Fabric::new(d),
        obs,
        reg: &d.registry,
        stim,
        bus_latency: u64::from(d.bus_latency.max(1)),
        bus_until: 0,
    };
    let mut c: u64 = 0;
    let mut last_activity = (0u64, 0usize, 0u64);
    loop {
        let mut all_done = true;
        for comp in &mut comps {
            match comp {
                Comp::Func(a) => {
                    if a.ready(&e.fab) {
                        let mut clock = c;
                        a.fire(&mut e.fab, e.stim, e.reg, &mut e.obs, &mut clock, 0, false)?;
                    }
                    all_done &= a.done();
                }
                Comp::Hw(h) => {
                    h.cycle(&mut e, c)?;
                    all_done &= h.done();
                }
                Comp::Micro(p) => {
                    p.cycle(&mut e, c)?;
                    all_done &= p.done();
                }
                Comp::Macro(p, busy_until) => {
                    if c >= *busy_until {
                        p.clock = c;
                        if let Some(cost) = p.step(&mut e.fab, &mut e.obs, e.reg)? {
                            *busy_until = c + cost.max(1);
                        }
                    }
                    all_done &= p.done();
                }
            }
        }
        if all_done {
            break;
        }
        let now = (e.fab.activity, e.obs.trace.events.len());
        if (now.0, now.1) != (last_activity.0, last_activity.1) {
            last_activity = (now.0, now.1, c);
        } else if c - last_activity.2 > WATCHDOG {
            let stuck: Vec<String> = comps
                .iter()
                .filter_map(|comp| match comp {
                    Comp::Func(a) if !a.done() => Some(a.name.clone()),
                    Comp::Hw(h) if !h.done() => Some(h.name.clone()),
                    Comp::Micro(p) if !p.done() => Some(p.name.clone()),
                    Comp::Macro(p, _) if !p.done() => Some(p.name.clone()),
                    _ => None,
                })
                .collect();
            return Err(SimError::Deadlock { at: c, cycles: WATCHDOG, detail: format!("waiting: {}", stuck.join(", ")) });
        }
        c += 1;
    }
    Ok((e.obs.trace, c))
}

/// Per-node simulation level for [`cosimulate_mixed`].
pub type NodeLevel = BTreeMap<String, u8>;

/// Runs each partition node at its assigned level (2 or 3) on one clock.
/// Unlisted nodes run at level 3. If every node is at level 2 this is the
/// plain level-2 simulation.
pub fn cosimulate_mixed(d: &Design, levels: &NodeLevel, stim: &Stimulus, ticks: u64) -> Result<SimResult, SimError> {
    let mut macro_nodes = vec![false; d.tlm.nodes.len()];
    for (name, &l) in levels {
        let n = d
            .tlm
            .nodes
            .iter()
            .position(|n| &n.id == name)
            .ok_or_else(|| SimError::Assignment(format!("no partition node '{name}'")))?;
        macro_nodes[n] = match l {
            2 => true,
            3 => false,
            other => return Err(SimError::Assignment(format!("'{name}': level {other} is not 2 or 3"))),
        };
    }
    if !macro_nodes.is_empty() && macro_nodes.iter().all(|&m| m) {
        return simulate(d, 2, stim, ticks);
    }
    let (trace, end_time) = level3(d, stim, ticks, Some(&macro_nodes))?;
    let mix: Vec<String> =
        d.tlm.nodes.iter().zip(&macro_nodes).map(|(n, &m)| format!("{}={}", n.id, if m { 2 } else { 3 })).collect();
    let trace = trace.with_meta("level", "mixed").with_meta("assignment", mix.join(" ")).with_meta("ticks", ticks);
    Ok(SimResult { level: 3, trace, end_time })
}
