// SPDX-License-Identifier: Apache-2.0

//! Functional-to-RTL block library.
//!
//! The default table lives in `data/rtl_library.txt`. Latencies there are
//! placeholders and can be replaced by loading another table.

use std::collections::BTreeMap;

use crate::model::BlockKind;

use super::HwError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Eligibility {
    /// Can be balanced by register insertion.
    Pipelined,
    /// Needs a sequencing controller.
    MulticycleOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum LatencyRule {
    Fixed(u32),
    /// `base + ceil(log2(taps))`
    TapTree(u32),
    /// One cycle per iteration.
    LoopCount,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    rtl_name: String,
    latency: LatencyRule,
    eligibility: Eligibility,
}

/// A resolved library lookup for one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtlLibraryEntry {
    pub rtl_name: String,
    pub latency: u32,
    pub eligibility: Eligibility,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RtlLibrary {
    kinds: BTreeMap<String, Entry>,
    /// Index of user functions with an RTL implementation.
    user: BTreeMap<String, Entry>,
}

const DEFAULT_TABLE: &str = include_str!("../../data/rtl_library.txt");

fn clog2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

impl Default for RtlLibrary {
    fn default() -> Self {
        Self::parse(DEFAULT_TABLE).expect("shipped RTL library table parses")
    }
}

impl RtlLibrary {
    /// Parses a table of `kind|user:<fn>  rtl_name  latency  eligibility`
    /// rows. Latency is an integer, `N+clog2(taps)` or `count`.
    pub fn parse(text: &str) -> Result<Self, HwError> {
        let mut lib = RtlLibrary { kinds: BTreeMap::new(), user: BTreeMap::new() };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: &str| HwError::Library(format!("line {}: {m}", i + 1));
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 4 {
                return Err(bad("expected 4 columns"));
            }
            let latency = if cols[2] == "count" {
                LatencyRule::LoopCount
            } else if let Some(base) = cols[2].strip_suffix("+clog2(taps)") {
                LatencyRule::TapTree(base.parse().map_err(|_| bad("bad latency base"))?)
            } else {
                LatencyRule::Fixed(cols[2].parse().map_err(|_| bad("bad latency"))?)
            };
            let eligibility = match cols[3] {
                "pipelined" => Eligibility::Pipelined,
                "multicycle" => Eligibility::MulticycleOnly,
                _ => return Err(bad("eligibility must be pipelined or multicycle")),
            };
            let entry = Entry { rtl_name: cols[1].to_string(), latency, eligibility };
            match cols[0].strip_prefix("user:") {
                Some(f) => lib.user.insert(f.to_string(), entry),
                None => lib.kinds.insert(cols[0].to_string(), entry),
            };
        }
        Ok(lib)
    }

    pub fn has_user_function(&self, name: &str) -> bool {
        self.user.contains_key(name)
    }

    /// Looks up `kind`. User blocks without an indexed implementation return
    /// `None`; the caller supplies a latency for those.
    pub fn lookup(&self, kind: &BlockKind) -> Option<RtlLibraryEntry> {
        let entry = match kind {
            BlockKind::User(f) => self.user.get(f)?,
            other => self.kinds.get(other.library_name())?,
        };
        let latency = match entry.latency {
            LatencyRule::Fixed(l) => l,
            LatencyRule::TapTree(base) => match kind {
                BlockKind::Fir(taps) => base + clog2(taps.len()),
                _ => base,
            },
            LatencyRule::LoopCount => match kind {
                BlockKind::ForLoop { count, .. } => *count,
                _ => 1,
            },
        };
        Some(RtlLibraryEntry { rtl_name: entry.rtl_name.clone(), latency, eligibility: entry.eligibility })
    }

    /// Entry for a user block with a designer-supplied latency.
    pub fn user_fallback(func: &str, latency: u32) -> RtlLibraryEntry {
        RtlLibraryEntry {
            rtl_name: format!("rtl_user_{func}"),
            latency,
            eligibility: Eligibility::MulticycleOnly,
        }
    }
}
