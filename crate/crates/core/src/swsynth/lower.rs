// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use crate::gma::{ColifNetlist, ModuleKind, Stmt};

use super::fsm::{Action, ApiLevel, Cond, Ctrl, TaskFsm, Transition};
use super::{SwError, STATUS_NOT_EMPTY, STATUS_NOT_FULL};

pub const BASE_ADDRESS: u32 = 0x1000;
pub const STRIDE: u32 = 16;
pub const ADDRESS_LIMIT: u32 = 0x1_0000;
pub const DATA_OFFSET: u32 = 0;
pub const STATUS_OFFSET: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddrEntry {
    /// Net name of the channel endpoint.
    pub endpoint: String,
    pub base: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AddressMap {
    pub entries: Vec<AddrEntry>,
}

impl AddressMap {
    pub fn base(&self, endpoint: &str) -> Option<u32> {
        self.entries.iter().find(|e| e.endpoint == endpoint).map(|e| e.base)
    }

    /// Endpoint owning `addr`, with the register offset.
    pub fn decode(&self, addr: u32) -> Option<(&str, u32)> {
        if addr < BASE_ADDRESS {
            return None;
        }
        let i = ((addr - BASE_ADDRESS) / STRIDE) as usize;
        let e = self.entries.get(i)?;
        Some((e.endpoint.as_str(), addr - e.base))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# endpoint base data status\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{} 0x{:04x} 0x{:04x} 0x{:04x}\n",
                e.endpoint,
                e.base,
                e.base + DATA_OFFSET,
                e.base + STATUS_OFFSET
            ));
        }
        s
    }
}

/// Assigns one register window per net touching a task, in net order.
pub fn allocate_address_map(n: &ColifNetlist) -> Result<AddressMap, SwError> {
    if !n.is_bound() {
        return Err(SwError::Unbound);
    }
    let kinds: BTreeMap<String, ModuleKind> = n.modules().into_iter().map(|(p, m)| (p, m.kind)).collect();
    let touches_task = |ep: &str| {
        ep.rsplit_once('.').is_some_and(|(m, _)| kinds.get(m) == Some(&ModuleKind::Task))
    };
    let endpoints: Vec<&str> =
        n.nets.iter().filter(|net| net.endpoints.iter().any(|e| touches_task(e))).map(|net| net.name.as_str()).collect();
    let capacity = ((ADDRESS_LIMIT - BASE_ADDRESS) / STRIDE) as usize;
    if endpoints.len() > capacity {
        return Err(SwError::AddressSpace(endpoints.len()));
    }
    Ok(AddressMap {
        entries: endpoints
            .into_iter()
            .enumerate()
            .map(|(i, e)| AddrEntry { endpoint: e.to_string(), base: BASE_ADDRESS + STRIDE * i as u32 })
            .collect(),
    })
}

/// Replaces send/recv with STATUS polling and DATA transfers.
pub fn lower_api(f: &TaskFsm, m: &AddressMap) -> Result<TaskFsm, SwError> {
    if f.level == ApiLevel::Micro {
        return Err(SwError::AlreadyLowered { task: f.task.clone() });
    }
    let mut out = TaskFsm {
        task: f.task.clone(),
        vars: f.vars.clone(),
        slots: f.slots.clone(),
        num_states: f.num_states,
        transitions: Vec::new(),
        level: ApiLevel::Micro,
    };
    let status = out.vars.len();
    let uses_channels = f.transitions.iter().any(|t| t.actions.last().is_some_and(Action::is_blocking));
    if uses_channels {
        out.vars.push("status".into());
    }
    let mut extra = Vec::new();
    for t in &f.transitions {
        let Some(Action::Op(last)) = t.actions.last().filter(|a| a.is_blocking()) else {
            out.transitions.push(t.clone());
            continue;
        };
        let base_of = |port: &String| m.base(port).ok_or_else(|| SwError::Unmapped(port.clone()));
        let (bit, data_op, base) = match last {
            Stmt::Recv { port, dst } => {
                let base = base_of(port)?;
                (STATUS_NOT_EMPTY, Action::BusRead { addr: base + DATA_OFFSET, dst: *dst, ctrl: Ctrl::Pop }, base)
            }
            Stmt::Send { port, src } => {
                let base = base_of(port)?;
                (STATUS_NOT_FULL, Action::BusWrite { addr: base + DATA_OFFSET, src: *src, ctrl: Ctrl::Push }, base)
            }
            _ => unreachable!("blocking statement"),
        };
        let check = out.num_states;
        out.num_states += 1;
        let guard: Vec<Cond> =
            t.guard.iter().filter(|c| !matches!(c, Cond::CanRecv(_) | Cond::CanSend(_))).cloned().collect();
        out.transitions.push(Transition {
            from: t.from,
            guard,
            actions: vec![Action::BusRead { addr: base + STATUS_OFFSET, dst: status, ctrl: Ctrl::None }],
            to: check,
        });
        let mut actions = t.actions[..t.actions.len() - 1].to_vec();
        actions.push(data_op);
        extra.push(Transition { from: check, guard: vec![Cond::StatusBit { var: status, bit, set: true }], actions, to: t.to });
        extra.push(Transition {
            from: check,
            guard: vec![Cond::StatusBit { var: status, bit, set: false }],
            actions: vec![],
            to: t.from,
        });
    }
    out.transitions.extend(extra);
    out.transitions.sort_by_key(|t| t.from);
    Ok(out)
}
