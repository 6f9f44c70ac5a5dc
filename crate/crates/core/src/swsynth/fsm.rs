// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use crate::gma::{Stmt, TaskBehavior, Var};
use crate::model::{BlockKind, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApiLevel {
    Macro,
    Micro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ctrl {
    Push,
    Pop,
    None,
}

impl Ctrl {
    pub fn as_str(&self) -> &'static str {
        match self {
            Ctrl::Push => "push",
            Ctrl::Pop => "pop",
            Ctrl::None => "none",
        }
    }
}

/// Guard conjunct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    CanRecv(String),
    CanSend(String),
    Lt(Var, u32),
    Ge(Var, u32),
    NonZero(Var),
    Zero(Var),
    /// `(var >> bit) & 1 == set`
    StatusBit { var: Var, bit: u32, set: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// A straight-line statement (never `Loop` or `If`).
    Op(Stmt),
    Set { dst: Var, value: Sample },
    Incr(Var),
    /// Branch without yield points inside.
    If { cond: Var, then_branch: Vec<Action>, else_branch: Vec<Action> },
    BusRead { addr: u32, dst: Var, ctrl: Ctrl },
    BusWrite { addr: u32, src: Var, ctrl: Ctrl },
}

impl Action {
    pub fn is_blocking(&self) -> bool {
        matches!(self, Action::Op(s) if s.is_blocking())
    }

    pub fn is_bus(&self) -> bool {
        matches!(self, Action::BusRead { .. } | Action::BusWrite { .. })
    }

    /// Whether the action does data computation (as opposed to
    /// communication or loop bookkeeping).
    pub fn is_compute(&self) -> bool {
        match self {
            Action::Op(s) => !s.is_blocking(),
            Action::If { .. } => true,
            _ => false,
        }
    }

    fn count_calls(&self) -> usize {
        match self {
            Action::Op(Stmt::Call { .. }) => 1,
            Action::If { then_branch, else_branch, .. } => {
                then_branch.iter().chain(else_branch).map(Action::count_calls).sum()
            }
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    /// Conjunction; empty means always enabled.
    pub guard: Vec<Cond>,
    pub actions: Vec<Action>,
    pub to: usize,
}

impl Transition {
    pub fn has_compute(&self) -> bool {
        self.actions.iter().any(Action::is_compute)
    }

    pub fn yields(&self) -> bool {
        self.actions.last().is_some_and(|a| a.is_blocking() || a.is_bus())
    }

    /// Calls executed when the transition fires with the given branch outcomes
    /// ignored (upper bound for nested branches).
    pub fn call_count(&self) -> usize {
        self.actions.iter().map(Action::count_calls).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskFsm {
    pub task: String,
    pub vars: Vec<String>,
    pub slots: Vec<BlockKind>,
    pub num_states: usize,
    /// Transitions grouped by source state, in priority order.
    pub transitions: Vec<Transition>,
    pub level: ApiLevel,
}

impl TaskFsm {
    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = (usize, &Transition)> {
        self.transitions.iter().enumerate().filter(move |(_, t)| t.from == state)
    }

    /// States reachable from state 0.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for (_, t) in self.outgoing(s) {
                if !seen[t.to] {
                    seen[t.to] = true;
                    stack.push(t.to);
                }
            }
        }
        seen
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn check(&self) -> Result<(), String> {
        for t in &self.transitions {
            if t.from >= self.num_states || t.to >= self.num_states {
                return Err(format!("transition {}->{} leaves the state set", t.from, t.to));
            }
            let n = t.actions.len();
            for (i, a) in t.actions.iter().enumerate() {
                if (a.is_blocking() || a.is_bus()) && i + 1 != n {
                    return Err(format!("blocking action not last in transition from {}", t.from));
                }
            }
        }
        if let Some(s) = self.reachable().iter().position(|r| !r) {
            return Err(format!("state {s} unreachable"));
        }
        Ok(())
    }
}

enum Cursor {
    At { state: usize, guard: Vec<Cond>, pending: Vec<Action> },
    /// Transitions whose target is not yet known.
    Open(Vec<usize>),
}

struct Builder {
    num_states: usize,
    trans: Vec<Transition>,
    vars: Vec<String>,
}

const OPEN: usize = usize::MAX;

impl Builder {
    fn new_state(&mut self) -> usize {
        self.num_states += 1;
        self.num_states - 1
    }

    fn emit(&mut self, from: usize, guard: Vec<Cond>, actions: Vec<Action>, to: usize) -> usize {
        self.trans.push(Transition { from, guard, actions, to });
        self.trans.len() - 1
    }

    fn sole_open_nonyield(&self, edges: &[usize]) -> Option<usize> {
        match edges {
            [e] if !self.trans[*e].yields() => Some(*e),
            _ => None,
        }
    }

    fn close(&mut self, cur: Cursor, target: usize) {
        match cur {
            Cursor::At { state, guard, pending } => {
                self.emit(state, guard, pending, target);
            }
            Cursor::Open(edges) => {
                for e in edges {
                    self.trans[e].to = target;
                }
            }
        }
    }

    /// Turns the cursor into open edges.
    fn open(&mut self, cur: Cursor) -> Vec<usize> {
        match cur {
            Cursor::At { state, guard, pending } => vec![self.emit(state, guard, pending, OPEN)],
            Cursor::Open(edges) => edges,
        }
    }

    fn simple(&mut self, cur: Cursor, a: Action) -> Cursor {
        match cur {
            Cursor::At { state, guard, mut pending } => {
                pending.push(a);
                Cursor::At { state, guard, pending }
            }
            Cursor::Open(edges) => {
                if let Some(e) = self.sole_open_nonyield(&edges) {
                    self.trans[e].actions.push(a);
                    return Cursor::Open(edges);
                }
                let s = self.new_state();
                self.close(Cursor::Open(edges), s);
                Cursor::At { state: s, guard: vec![], pending: vec![a] }
            }
        }
    }

    fn blocking(&mut self, cur: Cursor, stmt: Stmt) -> Cursor {
        let cond = match &stmt {
            Stmt::Recv { port, .. } => Cond::CanRecv(port.clone()),
            Stmt::Send { port, .. } => Cond::CanSend(port.clone()),
            _ => unreachable!("not a blocking statement"),
        };
        match cur {
            Cursor::At { state, mut guard, mut pending } => {
                guard.push(cond);
                pending.push(Action::Op(stmt));
                Cursor::Open(vec![self.emit(state, guard, pending, OPEN)])
            }
            Cursor::Open(edges) => {
                if let Some(e) = self.sole_open_nonyield(&edges) {
                    self.trans[e].guard.push(cond);
                    self.trans[e].actions.push(Action::Op(stmt));
                    return Cursor::Open(edges);
                }
                let s = self.new_state();
                self.close(Cursor::Open(edges), s);
                self.blocking(Cursor::At { state: s, guard: vec![], pending: vec![] }, stmt)
            }
        }
    }

    fn body(&mut self, mut cur: Cursor, body: &[Stmt]) -> Cursor {
        for s in body {
            cur = match s {
                s if s.is_blocking() => self.blocking(cur, s.clone()),
                Stmt::Loop { count, body } => {
                    let c = self.vars.len();
                    self.vars.push(format!("loop{c}"));
                    let cur = self.simple(cur, Action::Set { dst: c, value: 0 });
                    let head = self.new_state();
                    self.close(cur, head);
                    let inner = self.body(Cursor::At { state: head, guard: vec![Cond::Lt(c, *count)], pending: vec![] }, body);
                    let inner = self.simple(inner, Action::Incr(c));
                    self.close(inner, head);
                    Cursor::Open(vec![self.emit(head, vec![Cond::Ge(c, *count)], vec![], OPEN)])
                }
                Stmt::If { cond, then_branch, else_branch } if has_yield(then_branch) || has_yield(else_branch) => {
                    let b = match cur {
                        Cursor::At { state, guard, pending } if guard.is_empty() && pending.is_empty() => state,
                        other => {
                            let b = self.new_state();
                            self.close(other, b);
                            b
                        }
                    };
                    let t = self.body(Cursor::At { state: b, guard: vec![Cond::NonZero(*cond)], pending: vec![] }, then_branch);
                    let mut edges = self.open(t);
                    let e = self.body(Cursor::At { state: b, guard: vec![Cond::Zero(*cond)], pending: vec![] }, else_branch);
                    edges.extend(self.open(e));
                    Cursor::Open(edges)
                }
                Stmt::If { cond, then_branch, else_branch } => {
                    let a = Action::If {
                        cond: *cond,
                        then_branch: straight(then_branch),
                        else_branch: straight(else_branch),
                    };
                    self.simple(cur, a)
                }
                other => self.simple(cur, Action::Op(other.clone())),
            };
        }
        cur
    }
}

fn has_yield(body: &[Stmt]) -> bool {
    body.iter().any(|s| match s {
        Stmt::Loop { .. } => true,
        Stmt::If { then_branch, else_branch, .. } => has_yield(then_branch) || has_yield(else_branch),
        s => s.is_blocking(),
    })
}

fn straight(body: &[Stmt]) -> Vec<Action> {
    body.iter()
        .map(|s| match s {
            Stmt::If { cond, then_branch, else_branch } => Action::If {
                cond: *cond,
                then_branch: straight(then_branch),
                else_branch: straight(else_branch),
            },
            s => Action::Op(s.clone()),
        })
        .collect()
}

/// Builds the scheduling FSM for one task. State 0 is the entry; one
/// iteration of the body ends on every transition back into state 0.
pub fn build_task_fsm(b: &TaskBehavior) -> TaskFsm {
    let mut bl = Builder { num_states: 1, trans: Vec::new(), vars: b.vars.clone() };
    let cur = bl.body(Cursor::At { state: 0, guard: vec![], pending: vec![] }, &b.body);
    bl.close(cur, 0);
    // group by source state, keeping creation order within a state
    bl.trans.sort_by_key(|t| t.from);
    TaskFsm {
        task: b.task.clone(),
        vars: bl.vars,
        slots: b.slots.clone(),
        num_states: bl.num_states,
        transitions: bl.trans,
        level: ApiLevel::Macro,
    }
}

fn fmt_actions(f: &mut fmt::Formatter<'_>, fsm: &TaskFsm, acts: &[Action], indent: usize) -> fmt::Result {
    let pad = "  ".repeat(indent);
    let v = |i: &Var| fsm.vars[*i].as_str();
    let list = |xs: &[Var]| xs.iter().map(|x| fsm.vars[*x].as_str()).collect::<Vec<_>>().join(", ");
    for a in acts {
        match a {
            Action::Op(s) => match s {
                Stmt::Recv { port, dst } => writeln!(f, "{pad}{} = recv {port}", v(dst))?,
                Stmt::Send { port, src } => writeln!(f, "{pad}send {port} {}", v(src))?,
                Stmt::Call { callee, args, dsts, slot } => {
                    let lhs = if dsts.is_empty() { String::new() } else { format!("{} = ", list(dsts)) };
                    let st = slot.map(|s| format!(" [s{s}]")).unwrap_or_default();
                    writeln!(f, "{pad}{lhs}call {}({}){st}", callee.name(), list(args))?
                }
                Stmt::Assign { dst, src } => writeln!(f, "{pad}{} = {}", v(dst), v(src))?,
                Stmt::DelayRead { slot, dst } => writeln!(f, "{pad}{} = s{slot}.read", v(dst))?,
                Stmt::DelayWrite { slot, src } => writeln!(f, "{pad}s{slot}.write {}", v(src))?,
                Stmt::Observe { port, src } => writeln!(f, "{pad}observe {port} {}", v(src))?,
                Stmt::Loop { .. } | Stmt::If { .. } => unreachable!("control statement in action"),
            },
            Action::Set { dst, value } => writeln!(f, "{pad}{} = {value}", v(dst))?,
            Action::Incr(x) => writeln!(f, "{pad}{} += 1", v(x))?,
            Action::If { cond, then_branch, else_branch } => {
                writeln!(f, "{pad}if {} {{", v(cond))?;
                fmt_actions(f, fsm, then_branch, indent + 1)?;
                writeln!(f, "{pad}}} else {{")?;
                fmt_actions(f, fsm, else_branch, indent + 1)?;
                writeln!(f, "{pad}}}")?
            }
            Action::BusRead { addr, dst, ctrl } => writeln!(f, "{pad}{} = Read(0x{addr:04x}, {})", v(dst), ctrl.as_str())?,
            Action::BusWrite { addr, src, ctrl } => writeln!(f, "{pad}Write(0x{addr:04x}, {}, {})", v(src), ctrl.as_str())?,
        }
    }
    Ok(())
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::CanRecv(p) => write!(f, "can_recv({p})"),
            Cond::CanSend(p) => write!(f, "can_send({p})"),
            Cond::Lt(v, n) => write!(f, "v{v} < {n}"),
            Cond::Ge(v, n) => write!(f, "v{v} >= {n}"),
            Cond::NonZero(v) => write!(f, "v{v} != 0"),
            Cond::Zero(v) => write!(f, "v{v} == 0"),
            Cond::StatusBit { var, bit, set } => write!(f, "bit{bit}(v{var}) == {}", u8::from(*set)),
        }
    }
}

/// Pseudo-code listing: one block per state, transitions in priority order.
impl fmt::Display for TaskFsm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.level {
            ApiLevel::Macro => "macro",
            ApiLevel::Micro => "micro",
        };
        writeln!(f, "fsm {} ({level}, {} states)", self.task, self.num_states)?;
        for (i, k) in self.slots.iter().enumerate() {
            writeln!(f, "  state s{i} : {k}")?;
        }
        for s in 0..self.num_states {
            writeln!(f, "  S{s}:")?;
            for (_, t) in self.outgoing(s) {
                let guard = if t.guard.is_empty() {
                    "always".to_string()
                } else {
                    t.guard.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" && ")
                };
                writeln!(f, "    when {guard} -> S{}", t.to)?;
                fmt_actions(f, self, &t.actions, 3)?;
            }
        }
        Ok(())
    }
}
