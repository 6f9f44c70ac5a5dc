// SPDX-License-Identifier: Apache-2.0

//! Flow outputs as named text files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use super::{Design, FlowError};

/// Relative path to file contents. Iteration order is the write order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArtifactSet {
    pub files: BTreeMap<String, String>,
}

fn file_id(id: &str) -> String {
    id.replace('.', "_")
}

impl ArtifactSet {
    pub fn from_design(d: &Design) -> ArtifactSet {
        let mut files = BTreeMap::new();
        files.insert("partition.txt".to_string(), d.tlm.to_string());
        files.insert("netlist.json".to_string(), d.netlist.to_json());
        for m in &d.params.modules {
            files.insert(format!("params/{}", m.file_name()), m.to_text());
        }
        for b in &d.behaviors {
            files.insert(format!("behaviors/{}.beh.txt", file_id(&b.task)), b.to_string());
        }
        for s in &d.sw {
            let id = file_id(&d.tlm.nodes[s.node].id);
            let list = |img: &crate::swsynth::SoftwareImage| {
                img.fsms.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("\n")
            };
            files.insert(format!("sw/{id}.macro.fsm.txt"), list(&s.macro_image));
            files.insert(format!("sw/{id}.micro.fsm.txt"), list(&s.micro_image));
        }
        files.insert("sw/address_map.txt".to_string(), d.address_map.to_text());
        for h in &d.hw {
            files.insert(format!("hw/{}.rtl.txt", file_id(&d.tlm.nodes[h.node].id)), h.design.to_text());
        }
        let (k, per_node) = d.latency_report();
        let mut lat = format!("system k={k} samples\n");
        for (n, l) in per_node {
            writeln!(lat, "node {n} latency={l} cycles").unwrap();
        }
        files.insert("latency.txt".to_string(), lat);
        ArtifactSet { files }
    }

    pub fn insert(&mut self, name: impl Into<String>, text: impl Into<String>) {
        self.files.insert(name.into(), text.into());
    }
}

pub fn write_artifacts(dir: &Path, set: &ArtifactSet) -> Result<(), FlowError> {
    for (name, text) in &set.files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| FlowError::Io(format!("{}: {e}", parent.display())))?;
        }
        std::fs::write(&path, text).map_err(|e| FlowError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub level: u8,
    pub unit: &'static str,
    pub ticks: u64,
    /// Simulated end time in `unit`.
    pub end_time: u64,
    pub wall: Duration,
}

/// Wall-clock per simulation level. Machine-specific; kept out of the
/// deterministic artifacts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimingLog {
    pub rows: Vec<TimingRow>,
}

impl TimingLog {
    fn wall(&self, level: u8) -> Option<Duration> {
        self.rows.iter().find(|r| r.level == level).map(|r| r.wall)
    }

    /// Whether level 0 ran faster than level 2, and level 2 faster than 3.
    pub fn ordering_holds(&self) -> Option<bool> {
        let (a, b, c) = (self.wall(0)?, self.wall(2)?, self.wall(3)?);
        Some(a < b && b < c)
    }

    fn ratio(&self, r: &TimingRow) -> String {
        match self.wall(0) {
            Some(base) if !base.is_zero() => format!("{:.1}", r.wall.as_secs_f64() / base.as_secs_f64()),
            _ => "-".to_string(),
        }
    }

    fn ordering_note(&self) -> String {
        match self.ordering_holds() {
            Some(true) => "ordering: level 0 < level 2 < level 3 holds".into(),
            Some(false) => "ordering: level 0 < level 2 < level 3 VIOLATED".into(),
            None => "ordering: not measured".into(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| level | units | ticks | simulated time | wall-clock (ms) | ratio vs level 0 |\n");
        s.push_str("|---|---|---|---|---|---|\n");
        for r in &self.rows {
            writeln!(
                s,
                "| {} | {} | {} | {} | {:.3} | {} |",
                r.level,
                r.unit,
                r.ticks,
                r.end_time,
                r.wall.as_secs_f64() * 1e3,
                self.ratio(r)
            )
            .unwrap();
        }
        writeln!(s, "\n{}\n\nWall-clock figures and ratios are machine-specific.", self.ordering_note()).unwrap();
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,units,ticks,simulated_time,wall_ms,ratio_vs_level0\n");
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{:.3},{}",
                r.level,
                r.unit,
                r.ticks,
                r.end_time,
                r.wall.as_secs_f64() * 1e3,
                self.ratio(r)
            )
            .unwrap();
        }
        writeln!(s, "# {}", self.ordering_note()).unwrap();
        s.push_str("# wall-clock figures and ratios are machine-specific\n");
        s
    }
}
