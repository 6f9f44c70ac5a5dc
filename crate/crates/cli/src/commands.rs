// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use cosynth::flow::{check_model, write_artifacts, ArtifactSet, BuildOptions, Design, FlowError, TimingLog, TimingRow};
use cosynth::gma::{emit_netlist, emit_param_templates, ParamSet, ReadError};
use cosynth::sim::{compare_traces, cosimulate_mixed, simulate, time_unit, CompareMode, NodeLevel, Stimulus, Trace};

use crate::{Cmd, ModelArgs, ReportFormat, StimArgs};

pub enum CliError {
    /// Rejected input model or design.
    Model(String),
    Io(String),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Model(_) => ExitCode::from(1),
            CliError::Io(_) | CliError::Usage(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Model(m) | CliError::Io(m) | CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Io(m) => CliError::Io(m),
            other => CliError::Model(other.to_string()),
        }
    }
}

impl From<cosynth::sim::SimError> for CliError {
    fn from(e: cosynth::sim::SimError) -> Self {
        match e {
            cosynth::sim::SimError::Format(m) => CliError::Usage(m),
            cosynth::sim::SimError::Level(_) | cosynth::sim::SimError::Assignment(_) => CliError::Usage(e.to_string()),
            other => CliError::Model(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load(m: &ModelArgs) -> Result<Design, CliError> {
    let text = read(&m.model)?;
    let params = match &m.params {
        None => None,
        Some(dir) => Some(ParamSet::read_dir(dir).map_err(|e| match e {
            ReadError::Io(e) => CliError::Io(format!("{}: {e}", dir.display())),
            ReadError::Gma(e) => CliError::Model(e.to_string()),
        })?),
    };
    Ok(Design::from_source(&text, &BuildOptions { params, ..BuildOptions::default() })?)
}

fn stimulus(d: &Design, s: &StimArgs) -> Result<Stimulus, CliError> {
    match &s.stimulus {
        Some(p) => Ok(Stimulus::parse_csv(&read(p)?)?),
        None => Ok(Stimulus::seeded(d.input_ports(), s.ticks, s.seed, 100)),
    }
}

fn write_subset(d: &Design, out: &Path, keep: impl Fn(&str) -> bool) -> Result<usize, CliError> {
    let all = ArtifactSet::from_design(d);
    let set = ArtifactSet { files: all.files.into_iter().filter(|(k, _)| keep(k)).collect() };
    write_artifacts(out, &set)?;
    Ok(set.files.len())
}

/// Default comparison of a level against level 0.
fn default_mode(d: &Design, level: u8) -> CompareMode {
    match level {
        0 | 1 => CompareMode::Exact,
        2 => CompareMode::ValuesOnly,
        _ => CompareMode::ModuloLatency(Some(d.latency_report().0)),
    }
}

fn report_comparison(label: &str, a: &Trace, b: &Trace, mode: CompareMode) -> Result<bool, CliError> {
    let c = compare_traces(a, b, mode)?;
    if c.equal {
        match c.latency {
            Some(k) => println!("{label}: equal (latency {k})"),
            None => println!("{label}: equal"),
        }
    } else {
        let m = c.first_mismatch.expect("mismatch details");
        println!(
            "{label}: differ at {}[{}]: expected {:?}, got {:?}",
            m.port, m.index, m.expected, m.actual
        );
    }
    Ok(c.equal)
}

pub fn run(cmd: Cmd) -> Result<ExitCode, CliError> {
    match cmd {
        Cmd::Check { model } => {
            let text = read(&model)?;
            match check_model(&text, &BuildOptions::default()) {
                Ok((_, tlm, warnings)) => {
                    print!("{warnings}");
                    println!(
                        "ok: {} blocks, {} nodes, {} tasks, {} channels",
                        tlm.block_count(),
                        tlm.nodes.len(),
                        tlm.tasks.len(),
                        tlm.channels.len()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(FlowError::Invalid(r)) | Err(FlowError::Partition(r)) => {
                    print!("{r}");
                    Ok(ExitCode::from(1))
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::Gma { model, out } => {
            let d = load(&model)?;
            let n = write_subset(&d, &out.out, |k| {
                k == "partition.txt" || k == "netlist.json" || k.starts_with("behaviors/")
            })?;
            let params = match model.params {
                Some(_) => d.params.clone(),
                None => emit_param_templates(&emit_netlist(&d.tree)),
            };
            params.write_dir(&out.out.join("params")).map_err(|e| CliError::Io(e.to_string()))?;
            println!(
                "wrote {} files and {} parameter files to {}",
                n,
                params.modules.len(),
                out.out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::SynthSw { model, out } => {
            let d = load(&model)?;
            let n = write_subset(&d, &out.out, |k| k.starts_with("sw/") || k.starts_with("behaviors/"))?;
            println!("wrote {n} files to {}", out.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::SynthHw { model, out } => {
            let d = load(&model)?;
            let n = write_subset(&d, &out.out, |k| k.starts_with("hw/") || k == "latency.txt")?;
            println!("wrote {n} files to {}", out.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Flow { model, out, level, stim, compare } => {
            let d = load(&model)?;
            let n = write_subset(&d, &out.out, |_| true)?;
            println!("wrote {n} files to {}", out.out.display());
            let Some(level) = level else { return Ok(ExitCode::SUCCESS) };
            let s = stimulus(&d, &stim)?;
            let r = simulate(&d, level, &s, stim.ticks)?;
            write(&out.out.join(format!("trace.{level}.txt")), &r.trace.to_text())?;
            println!("level {level}: {} events, end time {} {}", r.trace.events.len(), r.end_time, time_unit(level));
            if !compare {
                return Ok(ExitCode::SUCCESS);
            }
            let r0 = simulate(&d, 0, &s, stim.ticks)?;
            write(&out.out.join("trace.0.txt"), &r0.trace.to_text())?;
            let ok = report_comparison(&format!("level {level} vs level 0"), &r0.trace, &r.trace, default_mode(&d, level))?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Simulate { model, out, level, stim, assign } => {
            let d = load(&model)?;
            let s = stimulus(&d, &stim)?;
            let (r, name) = if assign.is_empty() {
                (simulate(&d, level, &s, stim.ticks)?, format!("trace.{level}.txt"))
            } else {
                let mut levels = NodeLevel::new();
                for a in &assign {
                    let (node, l) = a
                        .split_once('=')
                        .and_then(|(n, l)| Some((n.to_string(), l.parse::<u8>().ok()?)))
                        .ok_or_else(|| CliError::Usage(format!("--assign expects NODE=LEVEL, got '{a}'")))?;
                    levels.insert(node, l);
                }
                (cosimulate_mixed(&d, &levels, &s, stim.ticks)?, "trace.mixed.txt".to_string())
            };
            let path = out.out.join(&name);
            write(&path, &r.trace.to_text())?;
            println!("{}: {} events, end time {}", path.display(), r.trace.events.len(), r.end_time);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Compare { left, right, mode } => {
            let mode = CompareMode::parse(&mode).ok_or_else(|| CliError::Usage(format!("unknown mode '{mode}'")))?;
            let a = Trace::parse(&read(&left)?)?;
            let b = Trace::parse(&read(&right)?)?;
            let ok = report_comparison("traces", &a, &b, mode)?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Report { model, out, stim, report } => {
            let d = load(&model)?;
            let s = stimulus(&d, &stim)?;
            let mut log = TimingLog::default();
            let mut traces = Vec::new();
            for level in 0..=3u8 {
                let t = Instant::now();
                let r = simulate(&d, level, &s, stim.ticks)?;
                log.rows.push(TimingRow {
                    level,
                    unit: time_unit(level),
                    ticks: stim.ticks,
                    end_time: r.end_time,
                    wall: t.elapsed(),
                });
                traces.push(r.trace);
            }
            let mut all_equal = true;
            for (level, t) in traces.iter().enumerate().skip(1) {
                let mode = default_mode(&d, level as u8);
                all_equal &= report_comparison(&format!("level {level} vs level 0"), &traces[0], t, mode)?;
            }
            let text = match report {
                ReportFormat::Markdown => log.to_markdown(),
                ReportFormat::Csv => log.to_csv(),
            };
            write(&out.out.join("timing.log"), &text)?;
            print!("{text}");
            Ok(if all_equal { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
