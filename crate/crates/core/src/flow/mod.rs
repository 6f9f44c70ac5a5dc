// SPDX-License-Identifier: Apache-2.0

//! End-to-end compilation: model text to a fully synthesized [`Design`].

mod artifacts;

use thiserror::Error;

use crate::gma::{
    attach_params, build_tree, emit_netlist, emit_param_templates, gen_task_behavior, ColifNetlist, DesignTree,
    GmaError, ParamSet, TaskBehavior, TreeRole,
};
use crate::hwsynth::{map_rtl_library, HwDesign, HwError, RtlLibrary};
use crate::model::{parse_model, validate_model, FnRegistry, ModelGraph, ParseError, Severity, ValidationReport};
use crate::swsynth::{
    allocate_address_map, build_task_fsm, lower_api, merge_schedule, AddressMap, SoftwareImage, SwError, TaskFsm,
};
use crate::tlm::{recognize_partition, validate_partition, Fifo, SendPoint, TlmModel};

pub use artifacts::{write_artifacts, ArtifactSet, TimingLog, TimingRow};

/// Default cycles per bus transaction.
pub const DEFAULT_BUS_LATENCY: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("model is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("partition is invalid:\n{0}")]
    Partition(ValidationReport),
    #[error(transparent)]
    Gma(#[from] GmaError),
    #[error(transparent)]
    Sw(#[from] SwError),
    #[error(transparent)]
    Hw(#[from] HwError),
    #[error("{0}")]
    Io(String),
}

#[derive(Clone)]
pub struct BuildOptions {
    /// Bound parameter files; `None` binds the template defaults.
    pub params: Option<ParamSet>,
    pub library: RtlLibrary,
    pub registry: FnRegistry,
    pub bus_latency: u32,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            params: None,
            library: RtlLibrary::default(),
            registry: FnRegistry::builtin(),
            bus_latency: DEFAULT_BUS_LATENCY,
        }
    }
}

/// A processor and the tasks it runs, in scheduler order.
#[derive(Debug, Clone)]
pub struct SwNode {
    pub node: usize,
    pub tasks: Vec<usize>,
    pub macro_image: SoftwareImage,
    pub micro_image: SoftwareImage,
}

#[derive(Debug, Clone)]
pub struct HwNode {
    pub node: usize,
    pub design: HwDesign,
}

/// Every artifact of the flow for one model.
#[derive(Clone)]
pub struct Design {
    pub tlm: TlmModel,
    pub tree: DesignTree,
    /// Netlist with parameters bound.
    pub netlist: ColifNetlist,
    pub params: ParamSet,
    pub behaviors: Vec<TaskBehavior>,
    /// Macro-level FSM per task.
    pub task_fsms: Vec<TaskFsm>,
    pub sw: Vec<SwNode>,
    pub hw: Vec<HwNode>,
    pub address_map: AddressMap,
    pub fifos: Vec<Fifo>,
    pub sends: Vec<SendPoint>,
    /// `cost_cycles` per task.
    pub task_cost: Vec<u32>,
    /// `cost_cycles` per node module.
    pub node_cost: Vec<u32>,
    pub registry: FnRegistry,
    pub library: RtlLibrary,
    pub bus_latency: u32,
}

fn errors_only(r: ValidationReport) -> ValidationReport {
    ValidationReport { diagnostics: r.diagnostics.into_iter().filter(|d| d.severity == Severity::Error).collect() }
}

/// Parses and checks a model; warnings are returned alongside.
pub fn check_model(text: &str, opts: &BuildOptions) -> Result<(ModelGraph, TlmModel, ValidationReport), FlowError> {
    let g = parse_model(text)?;
    let mut report = validate_model(&g, &opts.registry);
    if !errors_only(report.clone()).is_empty() {
        return Err(FlowError::Invalid(report));
    }
    let tlm = recognize_partition(&g);
    let part = validate_partition(&tlm, &opts.library);
    if !errors_only(part.clone()).is_empty() {
        return Err(FlowError::Partition(part));
    }
    report.diagnostics.extend(part.diagnostics);
    Ok((g, tlm, report))
}

impl Design {
    pub fn from_source(text: &str, opts: &BuildOptions) -> Result<Design, FlowError> {
        let (_, tlm, _) = check_model(text, opts)?;
        Design::from_tlm(tlm, opts)
    }

    pub fn from_tlm(tlm: TlmModel, opts: &BuildOptions) -> Result<Design, FlowError> {
        let tree = build_tree(&tlm);
        let unbound = emit_netlist(&tree);
        let params = match &opts.params {
            Some(p) => p.clone(),
            None => emit_param_templates(&unbound).fill_defaults(),
        };
        let netlist = attach_params(&unbound, &params)?;
        let cost_at = |id: usize| -> u32 {
            netlist
                .module(&tree.path(id))
                .and_then(|m| m.params.get("cost_cycles"))
                .map_or(1, |&c| u32::try_from(c).unwrap_or(u32::MAX))
        };
        let task_cost: Vec<u32> = (0..tlm.tasks.len())
            .map(|i| cost_at(tree.find(TreeRole::Task(i)).expect("task in tree")))
            .collect();
        let node_cost: Vec<u32> = (0..tlm.nodes.len())
            .map(|i| {
                let role = if tlm.nodes[i].role == crate::tlm::NodeRole::Software {
                    TreeRole::SwNode(i)
                } else {
                    TreeRole::HwNode(i)
                };
                cost_at(tree.find(role).expect("node in tree"))
            })
            .collect();

        let behaviors = (0..tlm.tasks.len())
            .map(|i| gen_task_behavior(&tree, i, &opts.registry))
            .collect::<Result<Vec<_>, _>>()?;
        let task_fsms: Vec<TaskFsm> = behaviors.iter().map(build_task_fsm).collect();
        let address_map = allocate_address_map(&netlist)?;
        let mut sw = Vec::new();
        for n in tlm.sw_nodes() {
            let tasks = tlm.nodes[n].members.clone();
            let macro_image = merge_schedule(tasks.iter().map(|&t| task_fsms[t].clone()).collect());
            let lowered = tasks.iter().map(|&t| lower_api(&task_fsms[t], &address_map)).collect::<Result<Vec<_>, _>>()?;
            let micro_image = merge_schedule(lowered).with_address_map(address_map.clone());
            sw.push(SwNode { node: n, tasks, macro_image, micro_image });
        }
        let mut hw = Vec::new();
        for n in tlm.hw_nodes() {
            let user_latency = |f: usize| Some(cost_at(tree.module_of(f)));
            let g = map_rtl_library(&tlm, n, &opts.library, &user_latency)?;
            hw.push(HwNode { node: n, design: HwDesign::synthesize(&g)? });
        }
        let fifos = tlm.fifos();
        let sends = tlm.send_points(&fifos);
        Ok(Design {
            tlm,
            tree,
            netlist,
            params,
            behaviors,
            task_fsms,
            sw,
            hw,
            address_map,
            fifos,
            sends,
            task_cost,
            node_cost,
            registry: opts.registry.clone(),
            library: opts.library.clone(),
            bus_latency: opts.bus_latency,
        })
    }

    /// Trace port names: model outputs and sinks.
    pub fn observed_ports(&self) -> Vec<String> {
        self.tlm.observed().into_iter().map(|n| self.tlm.flat.nodes[n].path.clone()).collect()
    }

    /// Model input names in declaration order.
    pub fn input_ports(&self) -> Vec<String> {
        self.tlm
            .flat
            .nodes
            .iter()
            .filter(|n| matches!(n.kind, crate::model::FlatKind::Input))
            .map(|n| n.path.clone())
            .collect()
    }

    /// End-to-end latency of the cycle-level simulation in samples, and
    /// each hardware node's own latency in cycles.
    pub fn latency_report(&self) -> (u32, Vec<(String, u32)>) {
        let per_node = self.hw.iter().map(|h| (self.tlm.nodes[h.node].id.clone(), h.design.latency())).collect();
        (0, per_node)
    }
}
