// SPDX-License-Identifier: Apache-2.0

use crate::gma::{exec_simple, BehaviorEnv, LocalState};
use crate::model::{FnRegistry, ModelError, Sample};

use super::fsm::{Action, Cond, Ctrl, TaskFsm};

/// Environment seen by an executing FSM.
pub trait FsmEnv: BehaviorEnv {
    fn can_recv(&self, port: &str) -> bool;
    fn can_send(&self, port: &str) -> bool;
    fn bus_read(&mut self, addr: u32, ctrl: Ctrl) -> Sample;
    fn bus_write(&mut self, addr: u32, v: Sample, ctrl: Ctrl);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Fired { transition: usize, compute: bool },
    Blocked,
    Done,
}

/// Execution state of one task FSM.
#[derive(Debug, Clone)]
pub struct FsmRun {
    pub state: usize,
    pub local: LocalState,
    pub iterations: u64,
    /// Stop after this many iterations.
    pub limit: Option<u64>,
    by_state: Vec<Vec<usize>>,
    /// Transitions that complete an iteration. A failed status poll that
    /// returns to the initial state does not.
    ends_iteration: Vec<bool>,
}

impl FsmRun {
    pub fn new(fsm: &TaskFsm, limit: Option<u64>) -> FsmRun {
        let mut by_state = vec![Vec::new(); fsm.num_states];
        for (i, t) in fsm.transitions.iter().enumerate() {
            by_state[t.from].push(i);
        }
        let local = LocalState {
            vars: vec![0; fsm.vars.len()],
            slots: fsm.slots.iter().map(|k| k.initial_state()).collect(),
        };
        let ends_iteration = fsm
            .transitions
            .iter()
            .map(|t| {
                let retry = t.actions.is_empty()
                    && matches!(t.guard.as_slice(), [Cond::StatusBit { set: false, .. }]);
                t.to == 0 && !retry
            })
            .collect();
        FsmRun { state: 0, local, iterations: 0, limit, by_state, ends_iteration }
    }

    pub fn done(&self) -> bool {
        self.limit.is_some_and(|l| self.iterations >= l)
    }

    fn holds(&self, c: &Cond, env: &dyn FsmEnv) -> bool {
        let v = &self.local.vars;
        match c {
            Cond::CanRecv(p) => env.can_recv(p),
            Cond::CanSend(p) => env.can_send(p),
            Cond::Lt(x, n) => i64::from(v[*x]) < i64::from(*n),
            Cond::Ge(x, n) => i64::from(v[*x]) >= i64::from(*n),
            Cond::NonZero(x) => v[*x] != 0,
            Cond::Zero(x) => v[*x] == 0,
            Cond::StatusBit { var, bit, set } => ((v[*var] as u32 >> bit) & 1 == 1) == *set,
        }
    }

    /// First enabled transition out of the current state.
    pub fn select(&self, fsm: &TaskFsm, env: &dyn FsmEnv) -> Option<usize> {
        if self.done() {
            return None;
        }
        self.by_state[self.state]
            .iter()
            .copied()
            .find(|&i| fsm.transitions[i].guard.iter().all(|c| self.holds(c, env)))
    }

    /// Executes transition `i` (assumed enabled).
    pub fn fire(
        &mut self,
        fsm: &TaskFsm,
        i: usize,
        env: &mut dyn FsmEnv,
        registry: &FnRegistry,
    ) -> Result<(), ModelError> {
        let t = &fsm.transitions[i];
        run_actions(&t.actions, &mut self.local, env, registry)?;
        self.state = t.to;
        if self.ends_iteration[i] {
            self.iterations += 1;
        }
        Ok(())
    }

    pub fn step(&mut self, fsm: &TaskFsm, env: &mut dyn FsmEnv, registry: &FnRegistry) -> Result<Step, ModelError> {
        if self.done() {
            return Ok(Step::Done);
        }
        match self.select(fsm, env) {
            None => Ok(Step::Blocked),
            Some(i) => {
                self.fire(fsm, i, env, registry)?;
                Ok(Step::Fired { transition: i, compute: fsm.transitions[i].has_compute() })
            }
        }
    }
}

fn run_actions(
    acts: &[Action],
    st: &mut LocalState,
    env: &mut dyn FsmEnv,
    registry: &FnRegistry,
) -> Result<(), ModelError> {
    for a in acts {
        match a {
            Action::Op(s) => exec_simple(s, st, env, registry)?,
            Action::Set { dst, value } => st.vars[*dst] = *value,
            Action::Incr(x) => st.vars[*x] = st.vars[*x].wrapping_add(1),
            Action::If { cond, then_branch, else_branch } => {
                let b = if st.vars[*cond] != 0 { then_branch } else { else_branch };
                run_actions(b, st, env, registry)?;
            }
            Action::BusRead { addr, dst, ctrl } => st.vars[*dst] = env.bus_read(*addr, *ctrl),
            Action::BusWrite { addr, src, ctrl } => env.bus_write(*addr, st.vars[*src], *ctrl),
        }
    }
    Ok(())
}
