//! Grid run-config files.
//!
//! ```text
//! # global keys, before any section
//! policy = priority            # reject | priority | arbitrated
//! schedule = cycle [A B]       # always | cycle [..] | injected [..] | random SEED
//! preload = 1_0
//! arbiter_budget = 256
//! horizon = 20
//!
//! [member A]
//! machine = @writer            # an inline [machine] section, or a file path
//! scale = rational 1 2
//! input = 0101
//! rules = pairing
//! oracle = cell-choice 0110
//!
//! [controller C]
//! machine = ctl.tm
//! mode = global
//!
//! [machine writer]
//! alphabet: _ 0 1
//! ...
//! ```
//!
//! File paths are relative to the config file. Printing inlines every
//! machine under a section named after its owner.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::config::{ControlMode, Controller, GridConfig, Member, DEFAULT_ARBITER_BUDGET};
use crate::constructions::OracleStream;
use crate::machine::{format, MachineSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{file}:{line}: {message}")]
pub struct ConfigParseError {
    pub file: String,
    pub line: usize,
    pub message: String,
}

enum Section {
    Global,
    Member(usize),
    Controller,
    Machine(String),
}

struct Reference {
    target: String,
    line: usize,
}

#[derive(Default)]
struct Pending {
    member_machines: Vec<(usize, Option<Reference>)>,
    controller_machine: Option<Reference>,
    controller_mode: Option<ControlMode>,
    controller_id: Option<(String, usize)>,
    machines: HashMap<String, (usize, Vec<String>)>,
}

/// Parses a config. `origin` names the file in errors and anchors
/// relative machine paths.
pub fn parse_config(text: &str, origin: &Path) -> Result<GridConfig, ConfigParseError> {
    let file = origin.display().to_string();
    let err = |line: usize, message: String| ConfigParseError {
        file: file.clone(),
        line,
        message,
    };
    let mut config = GridConfig::default();
    let mut pending = Pending::default();
    let mut section = Section::Global;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if let Section::Machine(name) = &section {
            if !raw.trim_start().starts_with('[') {
                pending
                    .machines
                    .get_mut(name)
                    .expect("section registered")
                    .1
                    .push(raw.to_string());
                continue;
            }
        }
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("unterminated section header `{content}`")))?;
            let mut parts = header.split_whitespace();
            let (kind, name) = match (parts.next(), parts.next(), parts.next()) {
                (Some(k), Some(n), None) => (k, n.to_string()),
                _ => {
                    return Err(err(
                        line,
                        format!("section header `[{header}]` needs a kind and a name"),
                    ))
                }
            };
            section = match kind {
                "member" => {
                    config
                        .members
                        .push(Member::new(name, MachineSpec::default()));
                    pending.member_machines.push((line, None));
                    Section::Member(config.members.len() - 1)
                }
                "controller" => {
                    if pending.controller_id.is_some() {
                        return Err(err(line, "only one controller is allowed".into()));
                    }
                    pending.controller_id = Some((name, line));
                    Section::Controller
                }
                "machine" => {
                    if pending.machines.contains_key(&name) {
                        return Err(err(line, format!("machine `{name}` defined twice")));
                    }
                    pending.machines.insert(name.clone(), (line, Vec::new()));
                    Section::Machine(name)
                }
                other => return Err(err(line, format!("unknown section kind `{other}`"))),
            };
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        match &section {
            Section::Global => match key {
                "policy" => config.policy = Some(value.parse().map_err(|e| err(line, e))?),
                "schedule" => config.schedule = value.parse().map_err(|e| err(line, e))?,
                "preload" => config.preload = value.to_string(),
                "arbiter_budget" => {
                    config.arbiter_budget = value
                        .parse()
                        .map_err(|_| err(line, format!("bad budget `{value}`")))?
                }
                "horizon" => {
                    config.horizon = Some(
                        value
                            .parse()
                            .map_err(|_| err(line, format!("bad horizon `{value}`")))?,
                    )
                }
                _ => return Err(err(line, format!("unknown key `{key}`"))),
            },
            Section::Member(i) => {
                let m = &mut config.members[*i];
                match key {
                    "machine" => {
                        pending.member_machines[*i].1 = Some(Reference {
                            target: value.to_string(),
                            line,
                        })
                    }
                    "scale" => m.scale = value.parse().map_err(|e| err(line, format!("{e}")))?,
                    "input" => m.input = value.to_string(),
                    "rules" => m.rules = value.split_whitespace().map(String::from).collect(),
                    "oracle" => {
                        let (role, bits) = value
                            .split_once(char::is_whitespace)
                            .ok_or_else(|| err(line, "oracle needs `ROLE BITS`".into()))?;
                        m.oracle = Some(OracleStream {
                            role: role.parse().map_err(|e| err(line, e))?,
                            bits: bits.trim().to_string(),
                        });
                    }
                    _ => return Err(err(line, format!("unknown member key `{key}`"))),
                }
            }
            Section::Controller => match key {
                "machine" => {
                    pending.controller_machine = Some(Reference {
                        target: value.to_string(),
                        line,
                    })
                }
                "mode" => pending.controller_mode = Some(value.parse().map_err(|e| err(line, e))?),
                _ => return Err(err(line, format!("unknown controller key `{key}`"))),
            },
            Section::Machine(_) => unreachable!("machine bodies are taken verbatim"),
        }
    }

    let base = origin.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve = |owner_line: usize, owner: &str, reference: &Option<Reference>| {
        let r = reference
            .as_ref()
            .ok_or_else(|| err(owner_line, format!("`{owner}` has no `machine` key")))?;
        if let Some(name) = r.target.strip_prefix('@') {
            let (start, body) = pending
                .machines
                .get(name)
                .ok_or_else(|| err(r.line, format!("no [machine {name}] section")))?;
            format::parse(&body.join("\n")).map_err(|e| err(start + e.line, e.message))
        } else {
            let path: PathBuf = base.join(&r.target);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| err(r.line, format!("cannot read `{}`: {e}", path.display())))?;
            format::parse(&text).map_err(|e| ConfigParseError {
                file: path.display().to_string(),
                line: e.line,
                message: e.message,
            })
        }
    };

    for (i, (header, reference)) in pending.member_machines.iter().enumerate() {
        let id = config.members[i].id.clone();
        config.members[i].spec = resolve(*header, &id, reference)?;
    }
    if let Some((id, line)) = &pending.controller_id {
        config.controller = Some(Controller {
            spec: resolve(*line, id, &pending.controller_machine)?,
            mode: pending
                .controller_mode
                .ok_or_else(|| err(*line, format!("controller `{id}` has no `mode` key")))?,
            id: id.clone(),
        });
    }
    Ok(config)
}

pub fn print_config(config: &GridConfig) -> String {
    let mut out = String::new();
    if let Some(p) = config.policy {
        writeln!(out, "policy = {}", p.name()).unwrap();
    }
    writeln!(out, "schedule = {}", config.schedule).unwrap();
    if !config.preload.is_empty() {
        writeln!(out, "preload = {}", config.preload).unwrap();
    }
    if config.arbiter_budget != DEFAULT_ARBITER_BUDGET {
        writeln!(out, "arbiter_budget = {}", config.arbiter_budget).unwrap();
    }
    if let Some(h) = config.horizon {
        writeln!(out, "horizon = {h}").unwrap();
    }
    for m in &config.members {
        writeln!(
            out,
            "\n[member {}]\nmachine = @{}\nscale = {}",
            m.id, m.id, m.scale
        )
        .unwrap();
        if !m.input.is_empty() {
            writeln!(out, "input = {}", m.input).unwrap();
        }
        if !m.rules.is_empty() {
            writeln!(out, "rules = {}", m.rules.join(" ")).unwrap();
        }
        if let Some(o) = &m.oracle {
            writeln!(out, "oracle = {} {}", o.role.name(), o.bits).unwrap();
        }
    }
    if let Some(c) = &config.controller {
        writeln!(
            out,
            "\n[controller {}]\nmachine = @{}\nmode = {}",
            c.id,
            c.id,
            c.mode.name()
        )
        .unwrap();
    }
    let machines = config
        .members
        .iter()
        .map(|m| (&m.id, &m.spec))
        .chain(config.controller.iter().map(|c| (&c.id, &c.spec)));
    for (id, spec) in machines {
        write!(out, "\n[machine {id}]\n{}", format::print(spec)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{construct, CONSTRUCTIONS};
    use crate::space::ConflictPolicy;

    fn origin() -> &'static Path {
        Path::new("grid.cfg")
    }

    #[test]
    fn printed_configs_parse_back() {
        for name in CONSTRUCTIONS {
            let mut cfg = construct(name, Some("0110"), 25).unwrap();
            cfg.horizon = Some(25);
            let text = print_config(&cfg);
            assert_eq!(
                parse_config(&text, origin()).unwrap(),
                cfg,
                "{name}\n{text}"
            );
        }
        let mut cfg = construct("controlled", None, 1).unwrap();
        cfg.policy = Some(ConflictPolicy::PriorityOrder);
        cfg.preload = "1_0".into();
        cfg.arbiter_budget = 9;
        cfg.members[0].input = "01".into();
        assert_eq!(parse_config(&print_config(&cfg), origin()).unwrap(), cfg);
    }

    #[test]
    fn errors_name_file_and_line() {
        let text = "policy = reject\nschedule = sometimes\n";
        let e = parse_config(text, origin()).unwrap_err();
        assert_eq!((e.file.as_str(), e.line), ("grid.cfg", 2));

        let text = "[member A]\nmachine = @m\n\n[machine m]\nalphabet: _ 0\nstates: q\nstart: q\n\
                    tapes: input work\nrule: q ** -> q - XX\n";
        let e = parse_config(text, origin()).unwrap_err();
        assert_eq!(e.line, 9, "{e}");
        assert!(e.to_string().starts_with("grid.cfg:9:"));

        let e = parse_config("[member A]\nscale = identity\n", origin()).unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_config("[member A]\nmachine = @nope\n", origin()).unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_config("[widget A]\n", origin()).unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn machine_files_resolve_relative_to_config() {
        let dir = std::env::temp_dir().join(format!("gridsim-text-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(
            dir.join("copy.tm"),
            "alphabet: _ 0 1\nstates: q\nstart: q\ntapes: input work\nrule: q 0* -> q - RS\n",
        )
        .unwrap();
        std::fs::write(dir.join("bad.tm"), "alphabet: _ 0\nbogus line\n").unwrap();
        let cfg_path = dir.join("grid.cfg");
        let cfg = parse_config("[member A]\nmachine = copy.tm\ninput = 00\n", &cfg_path).unwrap();
        assert_eq!(cfg.members[0].spec.states, vec!["q".to_string()]);
        let e = parse_config("[member A]\nmachine = bad.tm\n", &cfg_path).unwrap_err();
        assert!(e.file.ends_with("bad.tm") && e.line == 2, "{e}");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
