// SPDX-License-Identifier: Apache-2.0

use crate::flow::{Design, SwNode};
use crate::model::{ExtIn, FlatKind, FnRegistry, Program, Tap};
use crate::swsynth::{ImageRun, SoftwareImage};
use crate::tlm::Actor;

use super::actor::ProgramActor;
use super::fabric::{Fabric, Observer, TaskEnv};
use super::trace::{Stimulus, Trace};
use super::SimError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimResult {
    pub level: u8,
    pub trace: Trace,
    /// Last time reached, in the level's unit.
    pub end_time: u64,
}

pub(crate) fn stimulus_columns(d: &Design, stim: &Stimulus) -> Result<Vec<(String, Option<usize>)>, SimError> {
    let names = d.input_ports();
    let cols = stim.select(&names)?;
    Ok(names.into_iter().zip(cols).collect())
}

/// Simulates `ticks` input samples at `level`.
pub fn simulate(d: &Design, level: u8, stim: &Stimulus, ticks: u64) -> Result<SimResult, SimError> {
    let (trace, end_time) = match level {
        0 => level0(d, stim, ticks)?,
        1 => level1(d, stim, ticks)?,
        2 => level2(d, stim, ticks)?,
        3 => super::cycle::level3(d, stim, ticks, None)?,
        l => return Err(SimError::Level(l)),
    };
    let trace = trace.with_meta("level", level).with_meta("ticks", ticks).with_meta("unit", super::time_unit(level));
    Ok(SimResult { level, trace, end_time })
}

fn level0(d: &Design, stim: &Stimulus, ticks: u64) -> Result<(Trace, u64), SimError> {
    let flat = &d.tlm.flat;
    let cols = stimulus_columns(d, stim)?;
    let members: Vec<usize> = (0..flat.nodes.len()).collect();
    let ext: Vec<ExtIn> = (0..flat.nodes.len())
        .filter(|&n| matches!(flat.nodes[n].kind, FlatKind::Input))
        .map(ExtIn::Source)
        .collect();
    let observed = d.tlm.observed();
    let taps: Vec<Tap> = observed.iter().map(|&n| Tap::In(n, 0)).collect();
    let mut prog = Program::compile(flat, &members, &ext, &taps).map_err(|e| SimError::Model(e.to_string()))?;
    let mut trace = Trace::new(d.observed_ports());
    let mut inputs = vec![0; ext.len()];
    let mut out = Vec::new();
    for tick in 0..ticks {
        for (i, (_, c)) in cols.iter().enumerate() {
            inputs[i] = c.map_or(0, |c| stim.value(c, tick));
        }
        prog.fire_into(&inputs, &d.registry, &mut out).map_err(|e| SimError::Model(e.to_string()))?;
        for (p, &v) in out.iter().enumerate() {
            trace.push(tick, p, v);
        }
    }
    Ok((trace, ticks))
}

fn level1(d: &Design, stim: &Stimulus, ticks: u64) -> Result<(Trace, u64), SimError> {
    let cols = stimulus_columns(d, stim)?;
    let mut obs = Observer::new(d.observed_ports());
    let mut fab = Fabric::new(d);
    let mut actors = d
        .tlm
        .actors()
        .into_iter()
        .map(|a| ProgramActor::new(d, a, &cols, &obs, ticks))
        .collect::<Result<Vec<_>, _>>()?;
    for tick in 0..ticks {
        loop {
            let mut progressed = false;
            for a in &mut actors {
                if a.fired <= tick && a.ready(&fab) {
                    let mut clock = tick;
                    a.fire(&mut fab, stim, &d.registry, &mut obs, &mut clock, 0, false)?;
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        if let Some(a) = actors.iter().find(|a| a.fired != tick + 1) {
            return Err(SimError::Deadlock { at: tick, cycles: 1, detail: format!("actor '{}' could not fire", a.name) });
        }
    }
    Ok((obs.trace, ticks))
}

/// A processor running task FSMs without timing detail: a compute
/// transition costs the task's `cost_cycles`, communication is free.
pub(crate) struct MacroProc {
    pub name: String,
    image: SoftwareImage,
    run: ImageRun,
    cost: Vec<u64>,
    pub clock: u64,
}

impl MacroProc {
    pub fn new(d: &Design, sw: &SwNode, ticks: u64) -> MacroProc {
        MacroProc {
            name: d.tlm.nodes[sw.node].id.clone(),
            run: ImageRun::new(&sw.macro_image, Some(ticks)),
            image: sw.macro_image.clone(),
            cost: sw.tasks.iter().map(|&t| u64::from(d.task_cost[t].max(1))).collect(),
            clock: 0,
        }
    }

    pub fn done(&self) -> bool {
        self.run.all_done()
    }

    /// Fires one enabled transition, if any. Returns its cost when it fired.
    pub fn step(&mut self, fab: &mut Fabric, obs: &mut Observer, reg: &FnRegistry) -> Result<Option<u64>, SimError> {
        let mut env = TaskEnv { fab, obs, map: None, clock: self.clock, stamped: true };
        let Some((task, tr)) = self.run.next_enabled(&self.image, &env) else { return Ok(None) };
        let fsm = &self.image.fsms[task];
        let cost = if fsm.transitions[tr].has_compute() { self.cost[task] } else { 0 };
        env.clock += cost;
        self.run.runs[task].fire(fsm, tr, &mut env, reg).map_err(|e| SimError::Model(e.to_string()))?;
        self.clock = env.clock;
        Ok(Some(cost))
    }
}

fn level2(d: &Design, stim: &Stimulus, ticks: u64) -> Result<(Trace, u64), SimError> {
    let cols = stimulus_columns(d, stim)?;
    let mut obs = Observer::new(d.observed_ports());
    let mut fab = Fabric::new(d);
    // functional actors with their clock and cost
    let mut funcs: Vec<(ProgramActor, u64, u64)> = Vec::new();
    for a in d.tlm.actors() {
        match a {
            Actor::Task(_) => {}
            Actor::Hw(n) => funcs.push((ProgramActor::new(d, a, &cols, &obs, ticks)?, 0, u64::from(d.node_cost[n].max(1)))),
            Actor::Testbench(_) => funcs.push((ProgramActor::new(d, a, &cols, &obs, ticks)?, 0, 1)),
        }
    }
    let mut procs: Vec<MacroProc> = d.sw.iter().map(|s| MacroProc::new(d, s, ticks)).collect();
    loop {
        let mut progressed = false;
        for (a, clock, cost) in &mut funcs {
            if a.ready(&fab) {
                a.fire(&mut fab, stim, &d.registry, &mut obs, clock, *cost, true)?;
                progressed = true;
            }
        }
        for p in &mut procs {
            if p.step(&mut fab, &mut obs, &d.registry)?.is_some() {
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let end = funcs.iter().map(|f| f.1).chain(procs.iter().map(|p| p.clock)).max().unwrap_or(0);
    if let Some((a, ..)) = funcs.iter().find(|f| !f.0.done()) {
        return Err(SimError::Deadlock { at: end, cycles: 0, detail: format!("actor '{}' stopped early", a.name) });
    }
    if let Some(p) = procs.iter().find(|p| !p.done()) {
        return Err(SimError::Deadlock { at: end, cycles: 0, detail: format!("processor '{}' stopped early", p.name) });
    }
    Ok((obs.trace, end))
}
