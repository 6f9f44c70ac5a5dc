// SPDX-License-Identifier: Apache-2.0

//! Trace and stimulus files, and trace comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::Sample;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub time: u64,
    pub port: usize,
    pub value: Sample,
}

/// Observed values per port, in recording order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    /// `# key: value` header lines.
    pub meta: BTreeMap<String, String>,
    pub ports: Vec<String>,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(ports: Vec<String>) -> Trace {
        Trace { meta: BTreeMap::new(), ports, events: Vec::new() }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Trace {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn push(&mut self, time: u64, port: usize, value: Sample) {
        self.events.push(Event { time, port, value });
    }

    pub fn port_index(&self, name: &str) -> Option<usize> {
        self.ports.iter().position(|p| p == name)
    }

    /// `(time, value)` pairs of one port.
    pub fn series(&self, port: usize) -> Vec<(u64, Sample)> {
        self.events.iter().filter(|e| e.port == port).map(|e| (e.time, e.value)).collect()
    }

    pub fn values(&self, port: usize) -> Vec<Sample> {
        self.events.iter().filter(|e| e.port == port).map(|e| e.value).collect()
    }

    /// Events sorted by time, then port, keeping per-port order.
    pub fn sorted(mut self) -> Trace {
        self.events.sort_by_key(|e| (e.time, e.port));
        self
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            writeln!(s, "# {k}: {v}").unwrap();
        }
        writeln!(s, "# ports: {}", self.ports.join(" ")).unwrap();
        s.push_str("time,port,value\n");
        for e in &self.events {
            writeln!(s, "{},{},{}", e.time, self.ports[e.port], e.value).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Trace, SimError> {
        let mut t = Trace::default();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let bad = |m: &str| SimError::Format(format!("trace line {}: {m}", i + 1));
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                let (k, v) = h.split_once(':').ok_or_else(|| bad("expected '# key: value'"))?;
                let (k, v) = (k.trim(), v.trim());
                if k == "ports" {
                    t.ports = v.split_whitespace().map(String::from).collect();
                } else {
                    t.meta.insert(k.to_string(), v.to_string());
                }
                continue;
            }
            if !header_seen {
                if line != "time,port,value" {
                    return Err(bad("expected header 'time,port,value'"));
                }
                header_seen = true;
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(bad("expected 3 columns"));
            }
            let time = cols[0].trim().parse().map_err(|_| bad("bad time"))?;
            let name = cols[1].trim();
            let port = match t.port_index(name) {
                Some(p) => p,
                None => {
                    t.ports.push(name.to_string());
                    t.ports.len() - 1
                }
            };
            let value = cols[2].trim().parse().map_err(|_| bad("bad value"))?;
            t.push(time, port, value);
        }
        if !header_seen && !t.events.is_empty() {
            return Err(SimError::Format("trace has no header".into()));
        }
        Ok(t)
    }
}

/// Per-tick values for model inputs. Missing ticks read as zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stimulus {
    pub ports: Vec<String>,
    pub rows: Vec<Vec<Sample>>,
}

impl Stimulus {
    pub fn value(&self, port: usize, tick: u64) -> Sample {
        self.rows.get(tick as usize).and_then(|r| r.get(port)).copied().unwrap_or(0)
    }

    /// Values for model inputs `names`, in that order.
    pub fn select(&self, names: &[String]) -> Result<Vec<Option<usize>>, SimError> {
        if let Some(p) = self.ports.iter().find(|p| !names.contains(p)) {
            return Err(SimError::Format(format!("stimulus column '{p}' is not a model input")));
        }
        Ok(names.iter().map(|n| self.ports.iter().position(|p| p == n)).collect())
    }

    /// Deterministic pseudo-random stimulus in `[-range, range]`.
    pub fn seeded(ports: Vec<String>, ticks: u64, seed: u64, range: Sample) -> Stimulus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..ticks).map(|_| ports.iter().map(|_| rng.gen_range(-range..=range)).collect()).collect();
        Stimulus { ports, rows }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.ports.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Stimulus, SimError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let header = lines.next().ok_or_else(|| SimError::Format("stimulus is empty".into()))?;
        let ports: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, l) in lines.enumerate() {
            let row = l
                .split(',')
                .map(|c| c.trim().parse::<Sample>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| SimError::Format(format!("stimulus row {}: bad value", i + 1)))?;
            if row.len() != ports.len() {
                return Err(SimError::Format(format!("stimulus row {}: expected {} values", i + 1, ports.len())));
            }
            rows.push(row);
        }
        Ok(Stimulus { ports, rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMode {
    /// Same values at the same times.
    Exact,
    /// Same value sequences, the second trace `k` samples late. `None`
    /// searches for the smallest such `k`.
    ModuloLatency(Option<u32>),
    /// Same value sequences, times ignored.
    ValuesOnly,
}

impl CompareMode {
    pub fn parse(s: &str) -> Option<CompareMode> {
        match s {
            "exact" => Some(CompareMode::Exact),
            "values_only" | "values" => Some(CompareMode::ValuesOnly),
            "modulo_latency" | "latency" => Some(CompareMode::ModuloLatency(None)),
            other => other
                .strip_prefix("modulo_latency=")
                .and_then(|k| k.parse().ok())
                .map(|k| CompareMode::ModuloLatency(Some(k))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub port: String,
    /// Sample index in the first trace.
    pub index: usize,
    pub expected: Option<(u64, Sample)>,
    pub actual: Option<(u64, Sample)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub equal: bool,
    /// Latency found or checked in modulo-latency mode.
    pub latency: Option<u32>,
    pub first_mismatch: Option<Mismatch>,
}

fn first_diff(
    port: &str,
    a: &[(u64, Sample)],
    b: &[(u64, Sample)],
    k: usize,
    times: bool,
    allow_tail: bool,
) -> Option<Mismatch> {
    let b = b.get(k..).unwrap_or(&[]);
    let n = a.len().max(b.len());
    for i in 0..n {
        let (x, y) = (a.get(i), b.get(i));
        let same = match (x, y) {
            (Some(x), Some(y)) => x.1 == y.1 && (!times || x.0 == y.0),
            (Some(_), None) => allow_tail && a.len() - i <= k,
            (None, Some(_)) => allow_tail,
            (None, None) => true,
        };
        if !same {
            return Some(Mismatch { port: port.to_string(), index: i, expected: x.copied(), actual: y.copied() });
        }
    }
    None
}

/// Compares `b` against reference `a`. Traces must cover the same ports.
///
/// In modulo-latency mode `b` may end early by at most `k` samples (still
/// in flight) and may carry extra trailing samples.
pub fn compare_traces(a: &Trace, b: &Trace, mode: CompareMode) -> Result<Comparison, SimError> {
    let mut pa = a.ports.clone();
    let mut pb = b.ports.clone();
    pa.sort();
    pb.sort();
    if pa != pb {
        return Err(SimError::PortSet { left: a.ports.clone(), right: b.ports.clone() });
    }
    let series: Vec<(String, Vec<(u64, Sample)>, Vec<(u64, Sample)>)> = a
        .ports
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), a.series(i), b.series(b.port_index(p).expect("same port set"))))
        .collect();
    let check = |k: usize, times: bool, tail: bool| -> Option<Mismatch> {
        series.iter().find_map(|(p, x, y)| first_diff(p, x, y, k, times, tail))
    };
    let done = |m: Option<Mismatch>, latency| Comparison { equal: m.is_none(), latency, first_mismatch: m };
    Ok(match mode {
        CompareMode::Exact => done(check(0, true, false), None),
        CompareMode::ValuesOnly => done(check(0, false, false), None),
        CompareMode::ModuloLatency(Some(k)) => done(check(k as usize, false, true), Some(k)),
        CompareMode::ModuloLatency(None) => {
            let max = series.iter().map(|s| s.2.len()).max().unwrap_or(0);
            match (0..=max).find(|&k| check(k, false, true).is_none()) {
                Some(k) => done(None, Some(k as u32)),
                None => done(check(0, false, true), None),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(ports: &[&str], ev: &[(u64, usize, Sample)]) -> Trace {
        let mut t = Trace::new(ports.iter().map(|s| s.to_string()).collect());
        for &(a, b, c) in ev {
            t.push(a, b, c);
        }
        t
    }

    #[test]
    fn text_round_trip() {
        let t = tr(&["y", "s.k"], &[(0, 0, 1), (0, 1, -4), (3, 0, 7)]).with_meta("level", 2);
        let text = t.to_text();
        assert!(text.starts_with("# level: 2\n# ports: y s.k\ntime,port,value\n0,y,1\n"));
        assert_eq!(Trace::parse(&text).unwrap(), t);
    }

    #[test]
    fn stimulus_pads_and_selects() {
        let s = Stimulus::parse_csv("a,b\n1,2\n3,4\n").unwrap();
        assert_eq!((s.value(1, 1), s.value(0, 9)), (4, 0));
        assert_eq!(s.select(&["b".into(), "c".into(), "a".into()]).unwrap(), vec![Some(1), None, Some(0)]);
        assert!(s.select(&["a".into()]).is_err());
        assert_eq!(Stimulus::parse_csv(&s.to_csv()).unwrap(), s);
        let r = Stimulus::seeded(vec!["x".into()], 50, 7, 9);
        assert_eq!(r, Stimulus::seeded(vec!["x".into()], 50, 7, 9));
        assert!(r.rows.iter().all(|v| v[0].abs() <= 9));
    }

    #[test]
    fn modes() {
        let a = tr(&["y"], &[(0, 0, 1), (1, 0, 2), (2, 0, 3)]);
        let late = tr(&["y"], &[(5, 0, 0), (6, 0, 0), (7, 0, 1), (8, 0, 2), (9, 0, 3)]);
        assert!(!compare_traces(&a, &late, CompareMode::Exact).unwrap().equal);
        let c = compare_traces(&a, &late, CompareMode::ModuloLatency(None)).unwrap();
        assert_eq!((c.equal, c.latency), (true, Some(2)));
        assert!(!compare_traces(&a, &late, CompareMode::ModuloLatency(Some(1))).unwrap().equal);
        let shifted = tr(&["y"], &[(4, 0, 1), (9, 0, 2), (10, 0, 3)]);
        assert!(compare_traces(&a, &shifted, CompareMode::ValuesOnly).unwrap().equal);
        let bad = tr(&["y"], &[(0, 0, 1), (1, 0, 5), (2, 0, 3)]);
        let m = compare_traces(&a, &bad, CompareMode::ValuesOnly).unwrap().first_mismatch.unwrap();
        assert_eq!((m.index, m.expected, m.actual), (1, Some((1, 2)), Some((1, 5))));
        assert!(matches!(compare_traces(&a, &tr(&["z"], &[]), CompareMode::Exact), Err(SimError::PortSet { .. })));
    }
}
