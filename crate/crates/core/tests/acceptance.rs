// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance suite. Runs every criterion in sequence, prints
//! one verdict line each and fails if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::HwSpec;
use cosynth::flow::{ArtifactSet, BuildOptions, Design, TimingLog, TimingRow};
use cosynth::hwsynth::{CycleSim, HwDesign, OutTarget};
use cosynth::model::{parse_model, validate_model, FnRegistry, Sample};
use cosynth::sim::{compare_traces, simulate, time_unit, CompareMode, Stimulus, Trace};
use cosynth::tlm::Actor;

const CODEC: &str = include_str!("../examples/mini_codec.fdm");
const CODEC_TICKS: u64 = 1024;
const LONG_TICKS: u64 = 100_000;

type Verdict = Result<String, String>;

struct Suite {
    failed: Vec<u32>,
}

impl Suite {
    fn run(&mut self, n: u32, what: &str, limit: Duration, f: impl FnOnce() -> Verdict) {
        let t = Instant::now();
        let got = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let took = t.elapsed();
        let got = match got {
            Ok(d) if took > limit => Err(format!("{d}; over the {:.0}s limit", limit.as_secs_f64())),
            g => g,
        };
        match got {
            Ok(d) => println!("criterion {n} ({what}): PASS ({d}, {:.2}s)", took.as_secs_f64()),
            Err(d) => {
                println!("criterion {n} ({what}): FAIL ({d}, {:.2}s)", took.as_secs_f64());
                self.failed.push(n);
            }
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn build(src: &str) -> Result<Design, String> {
    Design::from_source(src, &BuildOptions::default()).map_err(|e| format!("{e}\n{src}"))
}

fn same(a: &Trace, b: &Trace, mode: CompareMode, ctx: &str) -> Result<(), String> {
    let c = compare_traces(a, b, mode).map_err(|e| format!("{ctx}: {e}"))?;
    ensure(c.equal, || format!("{ctx}: {mode:?} mismatch {:?}", c.first_mismatch))
}

/// Everything a codec run produces that must be reproducible.
#[derive(PartialEq)]
struct CodecRun {
    artifacts: ArtifactSet,
    traces: Vec<String>,
}

fn codec_run() -> Result<(CodecRun, String), String> {
    let d = build(CODEC)?;
    ensure(d.sw.len() == 1 && d.sw[0].tasks.len() >= 3, || "expected one processor with three tasks".into())?;
    ensure(d.hw.len() == 2, || "expected two hardware nodes".into())?;
    let stim = Stimulus::seeded(d.input_ports(), CODEC_TICKS, 7, 200);
    let runs = (0..=3).map(|l| simulate(&d, l, &stim, CODEC_TICKS)).collect::<Result<Vec<_>, _>>();
    let runs = runs.map_err(|e| e.to_string())?;
    let k = d.latency_report().0;
    same(&runs[0].trace, &runs[1].trace, CompareMode::Exact, "level 1")?;
    same(&runs[0].trace, &runs[2].trace, CompareMode::ValuesOnly, "level 2")?;
    same(&runs[0].trace, &runs[3].trace, CompareMode::ModuloLatency(Some(k)), "level 3")?;
    let values = |t: &Trace| (0..t.ports.len()).map(|p| t.values(p)).collect::<Vec<_>>();
    ensure(values(&runs[0].trace) == values(&runs[2].trace), || "level 2 values differ".into())?;
    let detail = format!("{} events per level, k={k}", runs[0].trace.events.len());
    let traces = runs.iter().map(|r| r.trace.to_text()).collect();
    Ok((CodecRun { artifacts: ArtifactSet::from_design(&d), traces }, detail))
}

/// Stimulus column of each RTL input and trace ports of each RTL output.
fn hw_ports(d: &Design, stim: &Stimulus, ports: &[String]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let hw = &d.hw[0];
    let io = d.tlm.actor_io(Actor::Hw(hw.node), &d.fifos, &d.sends);
    let path = |n: usize| d.tlm.flat.nodes[n].path.clone();
    let cols = io
        .inbound
        .iter()
        .map(|&f| stim.ports.iter().position(|p| *p == path(d.fifos[f].src.node)).expect("input column"))
        .collect();
    let outs = hw
        .design
        .graph()
        .out_targets
        .iter()
        .map(|t| match t {
            OutTarget::Send(sp) => d.sends[*sp]
                .fifos
                .iter()
                .map(|&f| ports.iter().position(|p| *p == path(d.fifos[f].dst.node)).expect("output port"))
                .collect(),
            OutTarget::Observe(_) => vec![],
        })
        .collect();
    (cols, outs)
}

fn pipelined_case(seed: u64) -> Result<(u32, u32), String> {
    let mut r = common::rng(seed);
    let plan: HwSpec = common::pipelined_hw(&mut r, 12);
    let src = plan.to_model();
    let d = build(&src)?;
    let (k_oracle, regs_oracle) = plan.slack_oracle();
    let HwDesign::Pipelined { graph, k } = &d.hw[0].design else {
        return Err(format!("seed {seed}: not pipelined\n{src}"));
    };
    ensure(*k == k_oracle, || format!("seed {seed}: k {k} vs oracle {k_oracle}\n{src}"))?;
    let regs = graph.register_count();
    ensure(regs == regs_oracle, || format!("seed {seed}: {regs} registers vs oracle {regs_oracle}\n{src}"))?;

    let ticks = 96;
    let stim = Stimulus::seeded(plan.input_names(), ticks, seed, 50);
    let func = simulate(&d, 0, &stim, ticks).map_err(|e| e.to_string())?;
    let ports = func.trace.ports.clone();
    let (cols, outs) = hw_ports(&d, &stim, &ports);
    let mut sim = CycleSim::new(&d.hw[0].design);
    let mut cyc = Trace::new(ports.clone());
    let mut out = Vec::new();
    let mut row = vec![0; cols.len()];
    for c in 0..ticks + *k as u64 {
        for (i, &col) in cols.iter().enumerate() {
            row[i] = stim.value(col, c);
        }
        out.clear();
        let input = (c < ticks).then_some(row.as_slice());
        sim.step(input, &d.registry, &mut out).map_err(|e| e.to_string())?;
        let mut now: Vec<Sample> = vec![0; ports.len()];
        for &(o, v) in &out {
            for &p in &outs[o] {
                now[p] = v;
            }
        }
        for (p, v) in now.into_iter().enumerate() {
            cyc.push(c, p, v);
        }
    }
    same(&func.trace, &cyc, CompareMode::ModuloLatency(Some(k_oracle)), &format!("seed {seed}\n{src}"))?;
    Ok((k_oracle, regs_oracle))
}

fn controlled_case(seed: u64) -> Result<u32, String> {
    let mut r = common::rng(seed);
    let plan = common::controlled_hw(&mut r, 8);
    let src = plan.to_model();
    let d = build(&src)?;
    let ii = plan.ii_oracle();
    let HwDesign::Controlled { controller, .. } = &d.hw[0].design else {
        return Err(format!("seed {seed}: not controlled\n{src}"));
    };
    ensure(controller.ii == ii, || format!("seed {seed}: II {} vs oracle {ii}\n{src}", controller.ii))?;

    let cycles = 160u64;
    let dense = Stimulus::seeded(plan.input_names(), cycles, seed, 50);
    // The controller takes one sample every II cycles.
    let samples = cycles.div_ceil(ii as u64);
    let mut sparse = Stimulus { ports: dense.ports.clone(), rows: vec![] };
    for m in 0..samples {
        sparse.rows.push((0..dense.ports.len()).map(|p| dense.value(p, m * ii as u64)).collect());
    }
    let func = simulate(&d, 0, &sparse, samples).map_err(|e| e.to_string())?;
    let ports = func.trace.ports.clone();
    let mut held = Trace::new(ports.clone());
    for p in 0..ports.len() {
        for (m, v) in func.trace.values(p).into_iter().enumerate() {
            for t in (m as u64 * ii as u64..).take(ii as usize).filter(|&t| t < cycles) {
                held.push(t, p, v);
            }
        }
    }
    let (cols, outs) = hw_ports(&d, &dense, &ports);
    let mut sim = CycleSim::new(&d.hw[0].design);
    let mut reg_trace = Trace::new(ports.clone());
    let mut out = Vec::new();
    let mut row = vec![0; cols.len()];
    for c in 0..cycles {
        for (i, &col) in cols.iter().enumerate() {
            row[i] = dense.value(col, c);
        }
        let input = sim.ready_for_input().then_some(row.as_slice());
        sim.step(input, &d.registry, &mut out).map_err(|e| e.to_string())?;
        let mut now: Vec<Sample> = vec![0; ports.len()];
        for (o, &v) in sim.output_register().iter().enumerate() {
            for &p in &outs[o] {
                now[p] = v;
            }
        }
        for (p, v) in now.into_iter().enumerate() {
            reg_trace.push(c, p, v);
        }
    }
    let held = held.sorted();
    same(&held, &reg_trace, CompareMode::ModuloLatency(Some(ii)), &format!("seed {seed}\n{src}"))?;
    Ok(ii)
}

fn loop_case(seed: u64) -> Result<bool, String> {
    let mut r = common::rng(seed);
    let plan = common::loop_graph(&mut r, 10);
    let src = plan.to_model();
    let g = parse_model(&src).map_err(|e| format!("{e}\n{src}"))?;
    let report = validate_model(&g, &FnRegistry::builtin());
    let reported: Vec<&Vec<String>> =
        report.iter().filter(|d| d.message.contains("algebraic loop")).filter_map(|d| d.cycle.as_ref()).collect();
    let cycles = plan.delay_free_cycles();
    ensure(reported.is_empty() == cycles.is_empty(), || {
        format!("seed {seed}: verdict {} vs {} simple cycles\n{src}", !reported.is_empty(), cycles.len())
    })?;
    let as_set = |names: &Vec<String>| -> Vec<usize> {
        let mut v: Vec<usize> = names
            .iter()
            .filter_map(|n| n.rsplit('.').next()?.strip_prefix('n')?.parse().ok())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        v.sort_unstable();
        v
    };
    for c in &reported {
        let s = as_set(c);
        ensure(cycles.contains(&s), || format!("seed {seed}: reported loop {c:?} is not a simple cycle\n{src}"))?;
    }
    Ok(!cycles.is_empty())
}

fn netlist_case(seed: u64) -> Result<(), String> {
    use cosynth::flow::check_model;
    use cosynth::gma::{build_tree, emit_netlist, ColifNetlist};
    let mut r = common::rng(seed);
    let plan = common::partitioned(&mut r);
    let src = plan.to_model();
    let (_, tlm, _) = check_model(&src, &BuildOptions::default()).map_err(|e| format!("seed {seed}: {e}\n{src}"))?;
    let n = emit_netlist(&build_tree(&tlm));
    let got = (n.modules().len(), n.port_count(), n.nets.len());
    let want = plan.netlist_counts();
    ensure(got == want, || format!("seed {seed}: (modules, ports, nets) {got:?} vs oracle {want:?}\n{src}"))?;
    let json = n.to_json();
    let back = ColifNetlist::from_json(&json).map_err(|e| format!("seed {seed}: {e}"))?;
    ensure(back == n, || format!("seed {seed}: JSON round trip changed the netlist"))?;
    ensure(back.to_json() == json, || format!("seed {seed}: JSON text not stable"))
}

const TASK_SHAPE: common::Shape =
    common::Shape { units: 1..=1, kinds: &[common::UnitKind::Sw], block: common::rich_block, chan: 0.2 };

const MIXED_SHAPE: common::Shape = common::Shape {
    units: 2..=4,
    kinds: &[common::UnitKind::Sw, common::UnitKind::Hw, common::UnitKind::Testbench],
    block: common::rich_block,
    chan: 0.2,
};

fn behavior_case(seed: u64) -> Result<(usize, usize), String> {
    let mut r = common::rng(seed);
    let plan = common::partitioned_with(&mut r, &TASK_SHAPE);
    let src = plan.to_model();
    let d = build(&src)?;
    let ticks = 64;
    let stim = Stimulus::seeded(d.input_ports(), ticks, seed, 40);
    let ctx = |e: cosynth::sim::SimError| format!("seed {seed}: {e}\n{src}");
    let macro_level = simulate(&d, 2, &stim, ticks).map_err(ctx)?;
    let bus_level = simulate(&d, 3, &stim, ticks).map_err(ctx)?;
    same(&macro_level.trace, &bus_level.trace, CompareMode::ValuesOnly, &format!("seed {seed}\n{src}"))?;
    let func = simulate(&d, 0, &stim, ticks).map_err(ctx)?;
    same(&func.trace, &macro_level.trace, CompareMode::ValuesOnly, &format!("seed {seed} level 0\n{src}"))?;
    let nonzero = bus_level.trace.events.iter().filter(|e| e.value != 0).count();
    Ok((d.tlm.tasks.len(), nonzero))
}

/// Every per-node choice of level 2 or 3 against the pure cycle level.
fn mixed_case(d: &Design, ticks: u64, seed: u64, ctx: &str) -> Result<usize, String> {
    use cosynth::sim::{cosimulate_mixed, NodeLevel};
    let stim = Stimulus::seeded(d.input_ports(), ticks, seed, 40);
    let pure = simulate(d, 3, &stim, ticks).map_err(|e| format!("{ctx}: {e}"))?;
    let names: Vec<String> = d.tlm.nodes.iter().map(|n| n.id.clone()).collect();
    for mask in 0..1u32 << names.len() {
        let levels: NodeLevel =
            names.iter().enumerate().map(|(i, n)| (n.clone(), if mask >> i & 1 == 1 { 2 } else { 3 })).collect();
        let mixed = cosimulate_mixed(d, &levels, &stim, ticks).map_err(|e| format!("{ctx} {levels:?}: {e}"))?;
        same(&pure.trace, &mixed.trace, CompareMode::ValuesOnly, &format!("{ctx} {levels:?}"))?;
    }
    Ok(1 << names.len())
}

/// Long codec run at levels 0 to 3. Returns the timing log and the
/// trace text per level.
fn long_run() -> Result<(TimingLog, Vec<String>), String> {
    let d = build(CODEC)?;
    let stim = Stimulus::seeded(d.input_ports(), LONG_TICKS, 8, 200);
    let mut log = TimingLog::default();
    let mut traces = Vec::new();
    for level in 0..=3 {
        let t = Instant::now();
        let r = simulate(&d, level, &stim, LONG_TICKS).map_err(|e| e.to_string())?;
        let wall = t.elapsed();
        log.rows.push(TimingRow { level, unit: time_unit(level), ticks: LONG_TICKS, end_time: r.end_time, wall });
        traces.push(r.trace.to_text());
    }
    Ok((log, traces))
}

fn all_seeds(n: u64, base: u64, f: impl Fn(u64) -> Result<(), String>) -> Result<(), String> {
    (0..n).try_for_each(|i| f(base + i))
}

#[test]
fn acceptance() {
    let mut s = Suite { failed: vec![] };
    let secs = Duration::from_secs;
    let mut first_codec = None;

    s.run(1, "mini-codec across levels 0-3", secs(10), || {
        let (run, detail) = codec_run()?;
        first_codec = Some(run);
        Ok(detail)
    });
    s.run(2, "register balancing on 200 pipelined graphs", secs(30), || {
        let got = (2_000..2_200).map(pipelined_case).collect::<Result<Vec<_>, _>>()?;
        let max_k = got.iter().map(|g| g.0).max().unwrap_or(0);
        let regs: u32 = got.iter().map(|g| g.1).sum();
        Ok(format!("200 graphs, k up to {max_k}, {regs} registers in total"))
    });
    s.run(3, "controller timing on 100 multicycle graphs", secs(30), || {
        let got = (3_000..3_100).map(controlled_case).collect::<Result<Vec<_>, _>>()?;
        Ok(format!("100 graphs, II from {} to {}", got.iter().min().unwrap(), got.iter().max().unwrap()))
    });
    s.run(4, "algebraic-loop verdicts on 120 graphs", secs(5), || {
        let mut loops = 0;
        for seed in 4_000..4_120 {
            loops += loop_case(seed)? as usize;
        }
        ensure(loops > 10 && loops < 110, || format!("only {loops} of 120 graphs have loops"))?;
        Ok(format!("{loops} with loops, {} without", 120 - loops))
    });
    s.run(5, "netlist counts and JSON round trip on 50 models", secs(10), || {
        all_seeds(50, 5_000, netlist_case).map(|_| "50 models".into())
    });
    s.run(6, "macro vs bus-level task behaviors on 100 designs", secs(30), || {
        let got = (6_000..6_100).map(behavior_case).collect::<Result<Vec<_>, _>>()?;
        let tasks: usize = got.iter().map(|g| g.0).sum();
        let nonzero: usize = got.iter().map(|g| g.1).sum();
        ensure(nonzero > 0, || "every output was zero".into())?;
        Ok(format!("100 designs, {tasks} tasks, {nonzero} nonzero samples"))
    });
    s.run(7, "mixed-level cosimulation under every assignment", secs(60), || {
        let codec = build(CODEC)?;
        let mut runs = mixed_case(&codec, 256, 70, "codec")?;
        let mut designs = 0;
        let mut seed = 7_000;
        while designs < 20 {
            let mut r = common::rng(seed);
            let plan = common::partitioned_with(&mut r, &MIXED_SHAPE);
            let src = plan.to_model();
            let d = build(&src)?;
            if !d.tlm.nodes.is_empty() {
                runs += mixed_case(&d, 48, seed, &format!("seed {seed}\n{src}"))?;
                designs += 1;
            }
            seed += 1;
        }
        Ok(format!("codec plus {designs} designs, {runs} assignments"))
    });
    let mut first_long = None;
    s.run(8, "wall-clock ordering over 10^5 ticks", secs(300), || {
        let (log, traces) = long_run()?;
        println!("{}", log.to_markdown());
        let first = Trace::parse(&traces[0]).map_err(|e| e.to_string())?;
        let last = Trace::parse(&traces[3]).map_err(|e| e.to_string())?;
        same(&first, &last, CompareMode::ValuesOnly, "level 3 over the long run")?;
        ensure(log.ordering_holds() == Some(true), || "level 0 < level 2 < level 3 does not hold".into())?;
        let ms = |l: usize| log.rows[l].wall.as_secs_f64() * 1e3;
        let detail = format!("{:.0} ms < {:.0} ms < {:.0} ms", ms(0), ms(2), ms(3));
        first_long = Some(traces);
        Ok(detail)
    });
    s.run(9, "repeat runs are byte-identical", secs(300), || {
        let (again, _) = codec_run()?;
        let first = first_codec.as_ref().ok_or("criterion 1 produced nothing")?;
        ensure(again.artifacts == first.artifacts, || "codec artifacts differ".into())?;
        ensure(again.traces == first.traces, || "codec traces differ".into())?;
        let (_, traces) = long_run()?;
        let long = first_long.as_ref().ok_or("criterion 8 produced nothing")?;
        ensure(traces == *long, || "long-run traces differ".into())?;
        let bytes: usize = first.artifacts.files.values().map(String::len).sum::<usize>()
            + first.traces.iter().chain(long).map(String::len).sum::<usize>();
        Ok(format!("{} artifact files, {bytes} bytes compared", first.artifacts.files.len()))
    });
    assert!(s.failed.is_empty(), "failed criteria: {:?}", s.failed);
}
