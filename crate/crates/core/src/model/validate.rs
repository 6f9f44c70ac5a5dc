// SPDX-License-Identifier: Apache-2.0

//! Structural checks on a parsed model, including algebraic-loop detection.

use std::collections::VecDeque;

use super::ast::ModelGraph;
use super::block::FnRegistry;
use super::diag::{Diagnostic, ValidationReport};
use super::flat::{FlatGraph, FlatKind, NodeId};

/// Validates `g` against the model invariants. Diagnostics come out in
/// source order.
pub fn validate_model(g: &ModelGraph, registry: &FnRegistry) -> ValidationReport {
    let (flat, resolution) = FlatGraph::build(g);
    let mut report = ValidationReport { diagnostics: resolution };

    for node in &flat.nodes {
        if let FlatKind::Block(kind) = &node.kind {
            for msg in kind.param_errors() {
                report.push(Diagnostic::error(node.line, &node.path, msg));
            }
            for f in kind.referenced_functions() {
                if !registry.contains(f) {
                    report.push(Diagnostic::error(
                        node.line,
                        &node.path,
                        format!("function '{f}' is not registered"),
                    ));
                }
            }
        }
    }

    for (id, node) in flat.nodes.iter().enumerate() {
        for (port_idx, port) in node.kind.input_ports().iter().enumerate() {
            let drivers = flat.incoming(id).filter(|e| e.dst_port == port_idx).count();
            match drivers {
                1 => {}
                0 => report.push(Diagnostic::error(
                    node.line,
                    format!("{}.{port}", node.path),
                    "input port is not driven",
                )),
                n => report.push(Diagnostic::error(
                    node.line,
                    format!("{}.{port}", node.path),
                    format!("input port has {n} drivers"),
                )),
            }
        }
    }

    for cycle in algebraic_loops(&flat) {
        let first = cycle[0];
        let names: Vec<String> = cycle.iter().map(|&n| flat.nodes[n].path.clone()).collect();
        report.push(
            Diagnostic::error(
                flat.nodes[first].line,
                &flat.nodes[first].path,
                "algebraic loop: cycle without a delay block",
            )
            .with_cycle(names),
        );
    }

    report.sort();
    report
}

/// One representative cycle per strongly connected component of the graph
/// with edges into delay blocks removed. Each cycle starts at the component's
/// earliest-declared node.
pub fn algebraic_loops(flat: &FlatGraph) -> Vec<Vec<NodeId>> {
    let n = flat.nodes.len();
    let mut succ: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for e in &flat.edges {
        if !flat.nodes[e.dst].kind.is_delay() {
            succ[e.src].push(e.dst);
        }
    }
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }
    let comps = tarjan(&succ);
    let mut loops = Vec::new();
    for comp in comps {
        let start = *comp.iter().min().expect("non-empty component");
        let nontrivial = comp.len() > 1 || succ[start].contains(&start);
        if !nontrivial {
            continue;
        }
        let mut in_comp = vec![false; n];
        for &c in &comp {
            in_comp[c] = true;
        }
        loops.push(shortest_cycle_through(start, &succ, &in_comp));
    }
    loops.sort_by_key(|c| c[0]);
    loops
}

fn shortest_cycle_through(start: NodeId, succ: &[Vec<NodeId>], in_comp: &[bool]) -> Vec<NodeId> {
    if succ[start].contains(&start) {
        return vec![start];
    }
    let mut prev = vec![usize::MAX; succ.len()];
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in &succ[u] {
            if !in_comp[v] {
                continue;
            }
            if v == start {
                let mut path = vec![u];
                let mut cur = u;
                while cur != start {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return path;
            }
            if prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    unreachable!("start lies on a cycle of its own component")
}

/// Iterative Tarjan SCC.
fn tarjan(succ: &[Vec<NodeId>]) -> Vec<Vec<NodeId>> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next_index = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(NodeId, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut child)) = work.last_mut() {
            if *child < succ[v].len() {
                let w = succ[v][*child];
                *child += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}
