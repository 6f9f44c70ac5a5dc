// SPDX-License-Identifier: Apache-2.0

//! `cosynth`: compile a block-diagram model to a HW/SW architecture and
//! simulate it at several levels.
//!
//! Exit status: 0 on success, 1 when the model is rejected or traces
//! differ, 2 on usage or I/O errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cosynth", version, about = "Block-diagram to HW/SW architecture flow")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model file (.fdm).
    #[arg(long)]
    model: PathBuf,
    /// Directory of filled `module.*.params` files. Defaults are used when absent.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output directory.
    #[arg(long, env = "FLOW_OUT", default_value = "flow_out")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct StimArgs {
    /// Number of input samples.
    #[arg(long, default_value_t = 1024)]
    ticks: u64,
    /// Stimulus CSV (header of input names). Random when absent.
    #[arg(long)]
    stimulus: Option<PathBuf>,
    /// Seed for the random stimulus.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Copy, Clone, ValueEnum)]
enum ReportFormat {
    Markdown,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a model and its partition.
    Check {
        #[arg(long)]
        model: PathBuf,
    },
    /// Netlist, task behaviors and parameter templates.
    Gma {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Task FSMs, schedules and the address map.
    SynthSw {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// RTL structure of every hardware node.
    SynthHw {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Every artifact; optionally simulate and compare against level 0.
    Flow {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Simulate at this level (0-3) after synthesis.
        #[arg(long)]
        level: Option<u8>,
        #[command(flatten)]
        stim: StimArgs,
        /// Compare the simulated trace with level 0.
        #[arg(long)]
        compare: bool,
    },
    /// Simulate at one level, or mixed with `--assign NODE=LEVEL`.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value_t = 0)]
        level: u8,
        #[command(flatten)]
        stim: StimArgs,
        /// Per-node level for mixed cosimulation, e.g. `HW_a=2`.
        #[arg(long = "assign")]
        assign: Vec<String>,
    },
    /// Compare two trace files.
    Compare {
        left: PathBuf,
        right: PathBuf,
        /// exact, values_only, modulo_latency or modulo_latency=<k>.
        #[arg(long, default_value = "exact")]
        mode: String,
    },
    /// Run levels 0-3 on one workload and tabulate wall-clock time.
    Report {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        stim: StimArgs,
        #[arg(long, value_enum, default_value = "markdown")]
        report: ReportFormat,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
