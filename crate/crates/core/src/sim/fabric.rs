// SPDX-License-Identifier: Apache-2.0

//! FIFOs shared by all simulated components, and the environment tasks see.

use std::collections::{HashMap, VecDeque};

use crate::flow::Design;
use crate::gma::BehaviorEnv;
use crate::model::Sample;
use crate::swsynth::{AddressMap, Ctrl, FsmEnv, DATA_OFFSET, STATUS_NOT_EMPTY, STATUS_NOT_FULL, STATUS_OFFSET};

use super::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Token {
    pub value: Sample,
    /// Producer clock when sent (macro level only).
    pub stamp: u64,
}

pub(crate) struct Fabric {
    pub queues: Vec<VecDeque<Token>>,
    pub depth: Vec<usize>,
    pub send_fifos: Vec<Vec<usize>>,
    recv_port: HashMap<String, usize>,
    send_port: HashMap<String, usize>,
    /// Pushes and pops so far.
    pub activity: u64,
}

impl Fabric {
    pub fn new(d: &Design) -> Fabric {
        let t = &d.tlm;
        Fabric {
            queues: d.fifos.iter().map(|f| VecDeque::with_capacity(f.depth)).collect(),
            depth: d.fifos.iter().map(|f| f.depth).collect(),
            send_fifos: d.sends.iter().map(|s| s.fifos.clone()).collect(),
            recv_port: d.fifos.iter().enumerate().map(|(i, f)| (t.edge_name(f.edge), i)).collect(),
            send_port: d.sends.iter().enumerate().map(|(i, s)| (t.edge_name(s.edge), i)).collect(),
            activity: 0,
        }
    }

    pub fn can_pop(&self, f: usize) -> bool {
        !self.queues[f].is_empty()
    }

    pub fn pop(&mut self, f: usize) -> Token {
        self.activity += 1;
        self.queues[f].pop_front().expect("pop from a non-empty FIFO")
    }

    pub fn can_send(&self, sp: usize) -> bool {
        self.send_fifos[sp].iter().all(|&f| self.queues[f].len() < self.depth[f])
    }

    pub fn send(&mut self, sp: usize, tok: Token) {
        self.activity += 1;
        for &f in &self.send_fifos[sp] {
            debug_assert!(self.queues[f].len() < self.depth[f]);
            self.queues[f].push_back(tok);
        }
    }

    fn recv_of(&self, port: &str) -> usize {
        *self.recv_port.get(port).unwrap_or_else(|| panic!("no FIFO for port '{port}'"))
    }

    fn send_of(&self, port: &str) -> usize {
        *self.send_port.get(port).unwrap_or_else(|| panic!("no send point for port '{port}'"))
    }
}

/// Trace recorder keyed by port name.
pub(crate) struct Observer {
    pub trace: Trace,
    index: HashMap<String, usize>,
}

impl Observer {
    pub fn new(ports: Vec<String>) -> Observer {
        let index = ports.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        Observer { trace: Trace::new(ports), index }
    }

    pub fn record(&mut self, port: usize, time: u64, v: Sample) {
        self.trace.push(time, port, v);
    }

    pub fn port(&self, name: &str) -> usize {
        *self.index.get(name).unwrap_or_else(|| panic!("'{name}' is not observed"))
    }
}

/// What a running task FSM sees.
pub(crate) struct TaskEnv<'a> {
    pub fab: &'a mut Fabric,
    pub obs: &'a mut Observer,
    pub map: Option<&'a AddressMap>,
    /// Local clock; receives merge token stamps into it when `stamped`.
    pub clock: u64,
    pub stamped: bool,
}

impl BehaviorEnv for TaskEnv<'_> {
    fn recv(&mut self, port: &str) -> Sample {
        let f = self.fab.recv_of(port);
        let tok = self.fab.pop(f);
        if self.stamped {
            self.clock = self.clock.max(tok.stamp);
        }
        tok.value
    }

    fn send(&mut self, port: &str, v: Sample) {
        let sp = self.fab.send_of(port);
        self.fab.send(sp, Token { value: v, stamp: self.clock });
    }

    fn observe(&mut self, port: &str, v: Sample) {
        let p = self.obs.port(port);
        self.obs.record(p, self.clock, v);
    }
}

impl FsmEnv for TaskEnv<'_> {
    fn can_recv(&self, port: &str) -> bool {
        self.fab.can_pop(self.fab.recv_of(port))
    }

    fn can_send(&self, port: &str) -> bool {
        self.fab.can_send(self.fab.send_of(port))
    }

    fn bus_read(&mut self, addr: u32, _ctrl: Ctrl) -> Sample {
        let map = self.map.expect("bus access needs an address map");
        let (ep, off) = map.decode(addr).unwrap_or_else(|| panic!("unmapped bus address {addr:#x}"));
        if off == STATUS_OFFSET {
            let not_empty = self.fab.recv_port.get(ep).is_some_and(|&f| self.fab.can_pop(f));
            let not_full = self.fab.send_port.get(ep).is_some_and(|&s| self.fab.can_send(s));
            ((u32::from(not_empty) << STATUS_NOT_EMPTY) | (u32::from(not_full) << STATUS_NOT_FULL)) as Sample
        } else {
            debug_assert_eq!(off, DATA_OFFSET);
            let ep = ep.to_string();
            self.recv(&ep)
        }
    }

    fn bus_write(&mut self, addr: u32, v: Sample, _ctrl: Ctrl) {
        let map = self.map.expect("bus access needs an address map");
        let (ep, _) = map.decode(addr).unwrap_or_else(|| panic!("unmapped bus address {addr:#x}"));
        let ep = ep.to_string();
        self.send(&ep, v);
    }
}
