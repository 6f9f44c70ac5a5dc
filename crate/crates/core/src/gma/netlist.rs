// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tree::{DesignTree, TreeRole};
use super::GmaError;
use crate::model::FlatKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleKind {
    Top,
    SwNode,
    HwNode,
    Task,
    Ip,
    ChannelAdapter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dir {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub dir: Dir,
    pub width: u32,
    pub protocol: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub addr_hint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Module {
    pub name: String,
    pub kind: ModuleKind,
    pub ports: Vec<Port>,
    #[serde(default)]
    pub params: BTreeMap<String, i64>,
    #[serde(default)]
    pub children: Vec<Module>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    /// `module.path.port` strings; the driver comes first.
    pub endpoints: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColifNetlist {
    pub top: Module,
    pub nets: Vec<Net>,
}

impl Module {
    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(&str, &'a Module)) {
        let path = if prefix.is_empty() { self.name.clone() } else { format!("{prefix}.{}", self.name) };
        f(&path, self);
        for c in &self.children {
            c.visit(&path, f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Module)) {
        let path = if prefix.is_empty() { self.name.clone() } else { format!("{prefix}.{}", self.name) };
        f(&path, self);
        for c in &mut self.children {
            c.visit_mut(&path, f);
        }
    }
}

impl ColifNetlist {
    /// All modules with their dotted paths, pre-order.
    pub fn modules(&self) -> Vec<(String, &Module)> {
        let mut out = Vec::new();
        self.top.visit("", &mut |p, m| out.push((p.to_string(), m)));
        out
    }

    pub fn for_each_module_mut(&mut self, mut f: impl FnMut(&str, &mut Module)) {
        self.top.visit_mut("", &mut f);
    }

    pub fn module(&self, path: &str) -> Option<&Module> {
        self.modules().into_iter().find(|(p, _)| p == path).map(|(_, m)| m)
    }

    pub fn port_count(&self) -> usize {
        self.modules().iter().map(|(_, m)| m.ports.len()).sum()
    }

    /// Whether every module carries bound parameters.
    pub fn is_bound(&self) -> bool {
        self.modules().iter().all(|(_, m)| m.params.contains_key("cost_cycles"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("netlist serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<ColifNetlist, GmaError> {
        let n: ColifNetlist = serde_json::from_str(text).map_err(|e| GmaError::Netlist(e.to_string()))?;
        n.check()?;
        Ok(n)
    }

    /// Structural checks: unique paths, endpoints resolve, one driver per net.
    pub fn check(&self) -> Result<(), GmaError> {
        let mods = self.modules();
        let mut index: BTreeMap<&str, &Module> = BTreeMap::new();
        for (p, m) in &mods {
            if index.insert(p.as_str(), m).is_some() {
                return Err(GmaError::Netlist(format!("duplicate module path '{p}'")));
            }
        }
        for net in &self.nets {
            let mut drivers = 0;
            for (k, ep) in net.endpoints.iter().enumerate() {
                let (mpath, pname) = ep
                    .rsplit_once('.')
                    .ok_or_else(|| GmaError::Netlist(format!("malformed endpoint '{ep}'")))?;
                let m = index.get(mpath).ok_or_else(|| GmaError::Netlist(format!("no module for '{ep}'")))?;
                let port = m.port(pname).ok_or_else(|| GmaError::Netlist(format!("no port '{ep}'")))?;
                // top-level ports face inward; the listed driver comes first
                let is_top = mpath == self.top.name;
                if (is_top && k == 0) || (!is_top && port.dir == Dir::Out) {
                    drivers += 1;
                }
            }
            if drivers != 1 {
                return Err(GmaError::Netlist(format!("net '{}' has {drivers} drivers", net.name)));
            }
        }
        Ok(())
    }
}

/// Port name for flat node `node` port `port` inside the module at tree index `m`.
pub(crate) fn port_name(d: &DesignTree, m: usize, node: usize, port: usize, output: bool) -> String {
    let flat = &d.tlm.flat;
    let n = &flat.nodes[node];
    if matches!(n.kind, FlatKind::Input | FlatKind::Output) {
        return n.path.clone();
    }
    let scope = d.scope_path(m);
    let rel = if scope.is_empty() {
        n.path.as_str()
    } else if n.path == scope {
        ""
    } else {
        n.path.strip_prefix(&format!("{scope}.")).unwrap_or(&n.path)
    };
    let p = flat.port_name(node, port, output);
    if rel.is_empty() {
        p
    } else {
        format!("{}_{p}", rel.replace('.', "_"))
    }
}

/// Flat edges crossing module boundaries, in link order.
pub(crate) fn cross_module_edges(d: &DesignTree) -> Vec<usize> {
    let flat = &d.tlm.flat;
    (0..flat.edges.len()).filter(|&i| d.module_of(flat.edges[i].src) != d.module_of(flat.edges[i].dst)).collect()
}

/// Name of the channel an edge belongs to, if any.
pub(crate) fn edge_channel(d: &DesignTree, edge: usize) -> Option<String> {
    let t = &d.tlm;
    let e = &t.flat.edges[edge];
    t.channels
        .iter()
        .find(|c| match c.flat_node {
            Some(n) => e.src == n || e.dst == n,
            None => {
                c.producers[0].node == e.src
                    && c.producers[0].port == e.src_port
                    && c.consumers[0].node == e.dst
                    && c.consumers[0].port == e.dst_port
            }
        })
        .map(|c| c.id.clone())
}

pub fn emit_netlist(d: &DesignTree) -> ColifNetlist {
    let t = &d.tlm;
    let flat = &t.flat;
    let cross = cross_module_edges(d);
    let mut ports: Vec<Vec<Port>> = vec![Vec::new(); d.nodes.len()];
    let add_port = |ports: &mut Vec<Vec<Port>>, m: usize, name: String, dir: Dir, fifo: bool| {
        match ports[m].iter_mut().find(|p| p.name == name) {
            Some(p) => {
                if fifo {
                    p.protocol = "fifo".into();
                }
            }
            None => ports[m].push(Port {
                name,
                dir,
                width: 1,
                protocol: if fifo { "fifo" } else { "wire" }.into(),
                addr_hint: None,
            }),
        }
    };
    for n in &flat.nodes {
        match n.kind {
            FlatKind::Input => add_port(&mut ports, 0, n.path.clone(), Dir::In, false),
            FlatKind::Output => add_port(&mut ports, 0, n.path.clone(), Dir::Out, false),
            _ => {}
        }
    }
    let mut nets = Vec::new();
    for &ei in &cross {
        let e = &flat.edges[ei];
        let (ms, md) = (d.module_of(e.src), d.module_of(e.dst));
        let channel = edge_channel(d, ei);
        let fifo = channel.is_some();
        let ps = port_name(d, ms, e.src, e.src_port, true);
        let pd = port_name(d, md, e.dst, e.dst_port, false);
        let src_dir = if flat.nodes[e.src].kind == FlatKind::Input { Dir::In } else { Dir::Out };
        let dst_dir = if flat.nodes[e.dst].kind == FlatKind::Output { Dir::Out } else { Dir::In };
        add_port(&mut ports, ms, ps.clone(), src_dir, fifo);
        add_port(&mut ports, md, pd.clone(), dst_dir, fifo);
        nets.push(Net {
            name: t.edge_name(ei),
            endpoints: vec![format!("{}.{ps}", d.path(ms)), format!("{}.{pd}", d.path(md))],
            channel,
        });
    }

    fn build(d: &DesignTree, id: usize, ports: &mut Vec<Vec<Port>>) -> Module {
        let node = &d.nodes[id];
        let kind = match node.role {
            TreeRole::Root => ModuleKind::Top,
            TreeRole::SwNode(_) => ModuleKind::SwNode,
            TreeRole::HwNode(_) => ModuleKind::HwNode,
            TreeRole::Task(_) => ModuleKind::Task,
            TreeRole::Ip(_) => ModuleKind::Ip,
            TreeRole::Channel(_) => ModuleKind::ChannelAdapter,
            TreeRole::IpBlock(_) | TreeRole::TestbenchBlock(_) => unreachable!("not a module"),
        };
        let children =
            node.children.iter().filter(|&&c| d.nodes[c].role.is_module()).map(|&c| build(d, c, ports)).collect();
        Module { name: node.name.clone(), kind, ports: std::mem::take(&mut ports[id]), params: BTreeMap::new(), children }
    }
    let top = build(d, 0, &mut ports);
    ColifNetlist { top, nets }
}
