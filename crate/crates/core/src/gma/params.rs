// SPDX-License-Identifier: Apache-2.0

//! Parameter templates and binding.
//!
//! One file per module, `module.<path>.params`, holding `key = value` lines.
//! Module keys: `cost_cycles`. Port keys, written `<port>.<key>`: `protocol`,
//! `width`, `addr_hint`. A blank value means "not filled in".

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use super::netlist::ColifNetlist;
use super::GmaError;

pub const MODULE_KEYS: [&str; 1] = ["cost_cycles"];
pub const PORT_KEYS: [&str; 3] = ["protocol", "width", "addr_hint"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Template,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortParams {
    pub name: String,
    pub values: BTreeMap<String, Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleParams {
    pub path: String,
    pub provenance: Provenance,
    pub values: BTreeMap<String, Option<String>>,
    pub ports: Vec<PortParams>,
    /// Defaults noted in the template, keyed like the file lines.
    pub defaults: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParamSet {
    pub modules: Vec<ModuleParams>,
}

pub fn emit_param_templates(n: &ColifNetlist) -> ParamSet {
    let modules = n
        .modules()
        .into_iter()
        .map(|(path, m)| {
            let mut defaults = BTreeMap::new();
            defaults.insert("cost_cycles".to_string(), "1".to_string());
            let ports = m
                .ports
                .iter()
                .map(|p| {
                    defaults.insert(format!("{}.protocol", p.name), p.protocol.clone());
                    defaults.insert(format!("{}.width", p.name), p.width.to_string());
                    defaults.insert(format!("{}.addr_hint", p.name), "auto".to_string());
                    PortParams { name: p.name.clone(), values: PORT_KEYS.iter().map(|k| (k.to_string(), None)).collect() }
                })
                .collect();
            ModuleParams {
                path,
                provenance: Provenance::Template,
                values: MODULE_KEYS.iter().map(|k| (k.to_string(), None)).collect(),
                ports,
                defaults,
            }
        })
        .collect();
    ParamSet { modules }
}

impl ModuleParams {
    fn lines(&self) -> Vec<(String, Option<&String>)> {
        let mut out: Vec<(String, Option<&String>)> =
            self.values.iter().map(|(k, v)| (k.clone(), v.as_ref())).collect();
        for p in &self.ports {
            out.extend(p.values.iter().map(|(k, v)| (format!("{}.{k}", p.name), v.as_ref())));
        }
        out
    }

    pub fn file_name(&self) -> String {
        format!("module.{}.params", self.path)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# module {}\n", self.path);
        for (k, v) in self.lines() {
            match (v, self.defaults.get(&k)) {
                (Some(v), _) => s.push_str(&format!("{k} = {v}\n")),
                (None, Some(d)) => s.push_str(&format!("{k} =   # default {d}\n")),
                (None, None) => s.push_str(&format!("{k} =\n")),
            }
        }
        s
    }

    /// Parses one parameter file. Keys are stored as written; validation
    /// happens in [`attach_params`].
    pub fn parse(path: &str, file: &str, text: &str) -> Result<ModuleParams, GmaError> {
        let mut m = ModuleParams {
            path: path.to_string(),
            provenance: Provenance::User,
            values: BTreeMap::new(),
            ports: Vec::new(),
            defaults: BTreeMap::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| GmaError::ParamSyntax {
                file: file.to_string(),
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            let (k, v) = (k.trim(), v.trim());
            let v = (!v.is_empty()).then(|| v.to_string());
            match k.split_once('.') {
                None => {
                    m.values.insert(k.to_string(), v);
                }
                Some((port, key)) => {
                    let idx = match m.ports.iter().position(|p| p.name == port) {
                        Some(i) => i,
                        None => {
                            m.ports.push(PortParams { name: port.to_string(), values: BTreeMap::new() });
                            m.ports.len() - 1
                        }
                    };
                    m.ports[idx].values.insert(key.to_string(), v);
                }
            }
        }
        Ok(m)
    }
}

impl ParamSet {
    /// Template entries: one per module plus one per port.
    pub fn entry_count(&self) -> usize {
        self.modules.iter().map(|m| 1 + m.ports.len()).sum()
    }

    /// Fills every blank value with its noted default.
    pub fn fill_defaults(&self) -> ParamSet {
        let mut out = self.clone();
        for m in &mut out.modules {
            let defaults = m.defaults.clone();
            for (k, v) in m.values.iter_mut() {
                if v.is_none() {
                    *v = defaults.get(k).cloned();
                }
            }
            for p in &mut m.ports {
                for (k, v) in p.values.iter_mut() {
                    if v.is_none() {
                        *v = defaults.get(&format!("{}.{k}", p.name)).cloned();
                    }
                }
            }
        }
        out
    }

    pub fn module(&self, path: &str) -> Option<&ModuleParams> {
        self.modules.iter().find(|m| m.path == path)
    }

    pub fn write_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for m in &self.modules {
            fs::write(dir.join(m.file_name()), m.to_text())?;
        }
        Ok(())
    }

    /// Reads every `module.<path>.params` file in `dir`, sorted by name.
    pub fn read_dir(dir: &Path) -> Result<ParamSet, ReadError> {
        let mut names: Vec<String> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| n.starts_with("module.") && n.ends_with(".params"))
            .collect();
        names.sort();
        let mut modules = Vec::new();
        for name in names {
            let text = fs::read_to_string(dir.join(&name))?;
            let path = &name["module.".len()..name.len() - ".params".len()];
            modules.push(ModuleParams::parse(path, &name, &text)?);
        }
        Ok(ParamSet { modules })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Gma(#[from] GmaError),
}

fn parse_int(module: &str, key: &str, v: &str, min: i64) -> Result<i64, GmaError> {
    let parsed = match v.strip_prefix("0x") {
        Some(hex) => i64::from_str_radix(hex, 16).ok(),
        None => v.parse().ok(),
    };
    parsed.filter(|&x| x >= min).ok_or_else(|| GmaError::ParamType {
        module: module.to_string(),
        key: key.to_string(),
        expected: if min > 0 { "a positive integer" } else { "a non-negative integer" },
        value: v.to_string(),
    })
}

/// Binds `p` to `n`. Every template key must be filled; no other keys are
/// accepted.
pub fn attach_params(n: &ColifNetlist, p: &ParamSet) -> Result<ColifNetlist, GmaError> {
    let paths: Vec<String> = n.modules().into_iter().map(|(p, _)| p).collect();
    if let Some(m) = p.modules.iter().find(|m| !paths.contains(&m.path)) {
        return Err(GmaError::UnknownModule(m.path.clone()));
    }
    let mut out = n.clone();
    let mut result = Ok(());
    out.for_each_module_mut(|path, module| {
        if result.is_err() {
            return;
        }
        result = (|| {
            let rec = p.module(path).ok_or_else(|| GmaError::MissingModule(path.to_string()))?;
            let missing = |key: &str| GmaError::MissingParam { module: path.to_string(), key: key.to_string() };
            let unknown = |key: String| GmaError::UnknownParam { module: path.to_string(), key };
            if let Some(k) = rec.values.keys().find(|k| !MODULE_KEYS.contains(&k.as_str())) {
                return Err(unknown(k.clone()));
            }
            let cost = rec.values.get("cost_cycles").cloned().flatten().ok_or_else(|| missing("cost_cycles"))?;
            let cost = parse_int(path, "cost_cycles", &cost, 0)?;
            if let Some(pp) = rec.ports.iter().find(|pp| module.port(&pp.name).is_none()) {
                let key = pp.values.keys().next().cloned().unwrap_or_default();
                return Err(unknown(format!("{}.{key}", pp.name)));
            }
            for port in &mut module.ports {
                let empty = BTreeMap::new();
                let vals = rec.ports.iter().find(|pp| pp.name == port.name).map(|pp| &pp.values).unwrap_or(&empty);
                if let Some(k) = vals.keys().find(|k| !PORT_KEYS.contains(&k.as_str())) {
                    return Err(unknown(format!("{}.{k}", port.name)));
                }
                let get = |k: &str| {
                    vals.get(k).cloned().flatten().ok_or_else(|| missing(&format!("{}.{k}", port.name)))
                };
                let protocol = get("protocol")?;
                if protocol != "fifo" && protocol != "wire" {
                    return Err(GmaError::ParamType {
                        module: path.to_string(),
                        key: format!("{}.protocol", port.name),
                        expected: "fifo or wire",
                        value: protocol,
                    });
                }
                let width = parse_int(path, &format!("{}.width", port.name), &get("width")?, 1)?;
                let hint = get("addr_hint")?;
                if hint != "auto" {
                    parse_int(path, &format!("{}.addr_hint", port.name), &hint, 0)?;
                }
                port.protocol = protocol;
                port.width = u32::try_from(width).map_err(|_| GmaError::ParamType {
                    module: path.to_string(),
                    key: format!("{}.width", port.name),
                    expected: "a 32-bit width",
                    value: width.to_string(),
                })?;
                port.addr_hint = Some(hint);
            }
            module.params.insert("cost_cycles".to_string(), cost);
            Ok(())
        })();
    });
    result.map(|_| out)
}
