// SPDX-License-Identifier: Apache-2.0

//! Per-task behaviors over a small statement IR.

use std::fmt;

use super::tree::DesignTree;
use super::GmaError;
use crate::model::{step_block_in_place, BlockKind, BlockState, FlatKind, FnRegistry, ModelError, Sample};
use crate::tlm::Actor;

/// Index of a task-local variable.
pub type Var = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Callee {
    /// Predefined block, called by its library name.
    Library(BlockKind),
    User(String),
}

impl Callee {
    pub fn name(&self) -> &str {
        match self {
            Callee::Library(k) => k.library_name(),
            Callee::User(f) => f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Recv { port: String, dst: Var },
    Send { port: String, src: Var },
    /// `slot` names the task-local state of stateful library blocks.
    Call { callee: Callee, args: Vec<Var>, dsts: Vec<Var>, slot: Option<usize> },
    Assign { dst: Var, src: Var },
    DelayRead { slot: usize, dst: Var },
    DelayWrite { slot: usize, src: Var },
    /// Records a value on an observed trace port.
    Observe { port: String, src: Var },
    Loop { count: u32, body: Vec<Stmt> },
    If { cond: Var, then_branch: Vec<Stmt>, else_branch: Vec<Stmt> },
}

impl Stmt {
    pub fn is_blocking(&self) -> bool {
        matches!(self, Stmt::Recv { .. } | Stmt::Send { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BehaviorMode {
    DirectUser,
    LibraryInstance,
    Merged,
}

impl BehaviorMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BehaviorMode::DirectUser => "direct_user",
            BehaviorMode::LibraryInstance => "library_instance",
            BehaviorMode::Merged => "merged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskBehavior {
    pub task: String,
    pub mode: BehaviorMode,
    pub vars: Vec<String>,
    /// Kinds owning task-local state, indexed by slot.
    pub slots: Vec<BlockKind>,
    /// One iteration of the task.
    pub body: Vec<Stmt>,
}

/// Channel access for the reference interpreter.
pub trait BehaviorEnv {
    fn recv(&mut self, port: &str) -> Sample;
    fn send(&mut self, port: &str, v: Sample);
    fn observe(&mut self, port: &str, v: Sample);
}

/// Mutable task-local storage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalState {
    pub vars: Vec<Sample>,
    pub slots: Vec<BlockState>,
}

impl TaskBehavior {
    pub fn initial_state(&self) -> LocalState {
        LocalState { vars: vec![0; self.vars.len()], slots: self.slots.iter().map(|k| k.initial_state()).collect() }
    }

    /// Runs one iteration straight through, assuming every recv has data.
    pub fn run_iteration(
        &self,
        st: &mut LocalState,
        env: &mut dyn BehaviorEnv,
        registry: &FnRegistry,
    ) -> Result<(), ModelError> {
        run_block(&self.body, st, env, registry)
    }

    /// Statements in pre-order.
    pub fn walk(&self) -> Vec<&Stmt> {
        fn go<'a>(body: &'a [Stmt], out: &mut Vec<&'a Stmt>) {
            for s in body {
                out.push(s);
                match s {
                    Stmt::Loop { body, .. } => go(body, out),
                    Stmt::If { then_branch, else_branch, .. } => {
                        go(then_branch, out);
                        go(else_branch, out);
                    }
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        go(&self.body, &mut out);
        out
    }

    /// Callee names in statement order.
    pub fn calls(&self) -> Vec<&str> {
        self.walk()
            .into_iter()
            .filter_map(|s| match s {
                Stmt::Call { callee, .. } => Some(callee.name()),
                _ => None,
            })
            .collect()
    }
}

/// Executes one non-control statement. Shared with the FSM executors.
pub fn exec_simple(
    s: &Stmt,
    st: &mut LocalState,
    env: &mut dyn BehaviorEnv,
    registry: &FnRegistry,
) -> Result<(), ModelError> {
    match s {
        Stmt::Recv { port, dst } => st.vars[*dst] = env.recv(port),
        Stmt::Send { port, src } => env.send(port, st.vars[*src]),
        Stmt::Call { callee, args, dsts, slot } => {
            let inputs: Vec<Sample> = args.iter().map(|&a| st.vars[a]).collect();
            let outs = match callee {
                Callee::User(f) => vec![registry.call(f, inputs[0])?],
                Callee::Library(kind) => match slot {
                    Some(sl) => step_block_in_place(kind, &inputs, &mut st.slots[*sl], registry)?,
                    None => step_block_in_place(kind, &inputs, &mut BlockState::Stateless, registry)?,
                },
            };
            for (d, v) in dsts.iter().zip(outs) {
                st.vars[*d] = v;
            }
        }
        Stmt::Assign { dst, src } => st.vars[*dst] = st.vars[*src],
        Stmt::DelayRead { slot, dst } => st.vars[*dst] = crate::model::delay_peek(&st.slots[*slot]),
        Stmt::DelayWrite { slot, src } => crate::model::delay_push(&mut st.slots[*slot], st.vars[*src]),
        Stmt::Observe { port, src } => env.observe(port, st.vars[*src]),
        Stmt::Loop { .. } | Stmt::If { .. } => unreachable!("control statement"),
    }
    Ok(())
}

fn run_block(
    body: &[Stmt],
    st: &mut LocalState,
    env: &mut dyn BehaviorEnv,
    registry: &FnRegistry,
) -> Result<(), ModelError> {
    for s in body {
        match s {
            Stmt::Loop { count, body } => {
                for _ in 0..*count {
                    run_block(body, st, env, registry)?;
                }
            }
            Stmt::If { cond, then_branch, else_branch } => {
                let b = if st.vars[*cond] != 0 { then_branch } else { else_branch };
                run_block(b, st, env, registry)?;
            }
            other => exec_simple(other, st, env, registry)?,
        }
    }
    Ok(())
}

pub fn gen_task_behavior(d: &DesignTree, task: usize, registry: &FnRegistry) -> Result<TaskBehavior, GmaError> {
    let t = &d.tlm;
    let flat = &t.flat;
    let tk = t.tasks.get(task).ok_or_else(|| GmaError::NoSuchTask(task.to_string()))?;
    for &b in &tk.blocks {
        if let Some(kind) = flat.nodes[b].kind.block() {
            if let Some(f) = kind.referenced_functions().into_iter().find(|f| !registry.contains(f)) {
                return Err(GmaError::UnknownFunction { task: tk.id.clone(), func: f.to_string() });
            }
        }
    }
    let fifos = t.fifos();
    let sends = t.send_points(&fifos);
    let io = t.actor_io(Actor::Task(task), &fifos, &sends);

    let mut vars: Vec<String> = Vec::new();
    let mut body = Vec::new();
    let mut ext: Vec<((usize, usize), Var)> = Vec::new();
    for (k, &f) in io.inbound.iter().enumerate() {
        vars.push(format!("in{k}"));
        ext.push(((fifos[f].dst.node, fifos[f].dst.port), k));
        body.push(Stmt::Recv { port: t.edge_name(fifos[f].edge), dst: k });
    }
    let rel = |path: &str| -> String {
        path.strip_prefix(&format!("{}.", tk.id)).unwrap_or(path).replace('.', "_")
    };
    let mut out_var = vec![Vec::new(); flat.nodes.len()];
    for &b in &tk.blocks {
        for p in flat.nodes[b].kind.output_ports() {
            out_var[b].push(vars.len());
            vars.push(format!("{}_{p}", rel(&flat.nodes[b].path)));
        }
    }
    let in_var = |n: usize, p: usize| -> Var {
        if let Some(&(_, v)) = ext.iter().find(|(k, _)| *k == (n, p)) {
            return v;
        }
        let e = flat.incoming(n).find(|e| e.dst_port == p).expect("validated: input driven");
        out_var[e.src][e.src_port]
    };

    let order = flat.topo_order(&tk.blocks).expect("validated: no algebraic loop");
    let kind_of = |n: usize| flat.nodes[n].kind.block().expect("task members are blocks").clone();
    let mut slots = Vec::new();
    let mode = if tk.blocks.len() == 1 {
        let n = tk.blocks[0];
        let kind = kind_of(n);
        if kind == BlockKind::Sink {
            body.push(Stmt::Observe { port: flat.nodes[n].path.clone(), src: in_var(n, 0) });
        } else {
            let slot = (kind.initial_state() != BlockState::Stateless).then(|| {
                slots.push(kind.clone());
                slots.len() - 1
            });
            let args = (0..kind.input_ports().len()).map(|p| in_var(n, p)).collect();
            let callee = match &kind {
                BlockKind::User(f) => Callee::User(f.clone()),
                k => Callee::Library(k.clone()),
            };
            body.push(Stmt::Call { callee, args, dsts: out_var[n].clone(), slot });
        }
        if matches!(kind, BlockKind::User(_)) {
            BehaviorMode::DirectUser
        } else {
            BehaviorMode::LibraryInstance
        }
    } else {
        let mut delay_writes = Vec::new();
        for &n in &order {
            let kind = kind_of(n);
            if kind.is_delay() {
                slots.push(kind.clone());
                let slot = slots.len() - 1;
                body.push(Stmt::DelayRead { slot, dst: out_var[n][0] });
                delay_writes.push(Stmt::DelayWrite { slot, src: in_var(n, 0) });
            }
        }
        for &n in &order {
            let kind = kind_of(n);
            let args: Vec<Var> = (0..kind.input_ports().len()).map(|p| in_var(n, p)).collect();
            match &kind {
                k if k.is_delay() => {}
                BlockKind::Sink => body.push(Stmt::Observe { port: flat.nodes[n].path.clone(), src: args[0] }),
                BlockKind::ForLoop { count, func } => {
                    let acc = out_var[n][0];
                    body.push(Stmt::Assign { dst: acc, src: args[0] });
                    body.push(Stmt::Loop {
                        count: *count,
                        body: vec![Stmt::Call {
                            callee: Callee::User(func.clone()),
                            args: vec![acc],
                            dsts: vec![acc],
                            slot: None,
                        }],
                    });
                }
                BlockKind::IfElse => {
                    let out = out_var[n][0];
                    body.push(Stmt::If {
                        cond: args[0],
                        then_branch: vec![Stmt::Assign { dst: out, src: args[1] }],
                        else_branch: vec![Stmt::Assign { dst: out, src: args[2] }],
                    });
                }
                BlockKind::User(f) => body.push(Stmt::Call {
                    callee: Callee::User(f.clone()),
                    args,
                    dsts: out_var[n].clone(),
                    slot: None,
                }),
                k => {
                    let slot = (k.initial_state() != BlockState::Stateless).then(|| {
                        slots.push(k.clone());
                        slots.len() - 1
                    });
                    body.push(Stmt::Call { callee: Callee::Library(k.clone()), args, dsts: out_var[n].clone(), slot });
                }
            }
        }
        body.extend(delay_writes);
        BehaviorMode::Merged
    };
    for &s in &io.outbound {
        let sp = &sends[s];
        body.push(Stmt::Send { port: t.edge_name(sp.edge), src: out_var[sp.src.node][sp.src.port] });
    }
    // every task member is a block; model ports live in the testbench
    debug_assert!(tk.blocks.iter().all(|&b| matches!(flat.nodes[b].kind, FlatKind::Block(_))));
    Ok(TaskBehavior { task: tk.id.clone(), mode, vars, slots, body })
}

fn fmt_body(f: &mut fmt::Formatter<'_>, b: &TaskBehavior, body: &[Stmt], indent: usize) -> fmt::Result {
    let pad = "  ".repeat(indent);
    let v = |i: &Var| b.vars[*i].as_str();
    let list = |xs: &[Var]| xs.iter().map(|x| b.vars[*x].as_str()).collect::<Vec<_>>().join(", ");
    for s in body {
        match s {
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
            Stmt::Loop { count, body } => {
                writeln!(f, "{pad}loop {count} {{")?;
                fmt_body(f, b, body, indent + 1)?;
                writeln!(f, "{pad}}}")?
            }
            Stmt::If { cond, then_branch, else_branch } => {
                writeln!(f, "{pad}if {} {{", v(cond))?;
                fmt_body(f, b, then_branch, indent + 1)?;
                writeln!(f, "{pad}}} else {{")?;
                fmt_body(f, b, else_branch, indent + 1)?;
                writeln!(f, "{pad}}}")?
            }
        }
    }
    Ok(())
}

impl fmt::Display for TaskBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "task {} ({})", self.task, self.mode.as_str())?;
        for (i, k) in self.slots.iter().enumerate() {
            writeln!(f, "  state s{i} : {k}")?;
        }
        fmt_body(f, self, &self.body, 1)
    }
}
