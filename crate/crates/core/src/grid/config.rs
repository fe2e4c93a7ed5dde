use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::constructions::OracleStream;
use crate::machine::{
    is_reserved, InputError, Machine, MachineSpec, SpaceOp, Symbol, ValidationReport,
};
use crate::schedule::{ExchangeSchedule, TimeScale};
use crate::space::ConflictPolicy;
use crate::Tick;

/// Writer id used for preloaded space contents.
pub const PRELOAD_WRITER: &str = "@init";

/// Members are numbered with one decimal digit in the controller's
/// conflict encoding and directive language.
pub const MAX_CONTROLLED_MEMBERS: usize = 10;

pub const DEFAULT_ARBITER_BUDGET: u64 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ControlMode {
    /// The controller decides when and where members touch the space, and
    /// settles conflicts.
    Global,
    /// Members act on their own rules; the controller only settles
    /// conflicts.
    Local,
}

impl ControlMode {
    pub fn name(self) -> &'static str {
        match self {
            ControlMode::Global => "global",
            ControlMode::Local => "local",
        }
    }
}

impl FromStr for ControlMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(ControlMode::Global),
            "local" => Ok(ControlMode::Local),
            other => Err(format!("unknown control mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Member {
    pub id: String,
    pub spec: MachineSpec,
    pub scale: TimeScale,
    /// Default input word; run-time inputs override it.
    pub input: String,
    /// Declared local interaction rule sets, by id.
    pub rules: Vec<String>,
    /// Set when the member carries externally injected data.
    pub oracle: Option<OracleStream>,
}

impl Member {
    pub fn new(id: impl Into<String>, spec: MachineSpec) -> Self {
        Self {
            id: id.into(),
            spec,
            scale: TimeScale::Identity,
            input: String::new(),
            rules: Vec::new(),
            oracle: None,
        }
    }

    pub fn with_scale(mut self, scale: TimeScale) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_input(mut self, input: impl Into<String>) -> Self {
        self.input = input.into();
        self
    }

    pub fn with_rules(mut self, rules: &[&str]) -> Self {
        self.rules = rules.iter().map(|s| s.to_string()).collect();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Controller {
    pub id: String,
    pub spec: MachineSpec,
    pub mode: ControlMode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridConfig {
    pub members: Vec<Member>,
    /// `None` picks arbitration when a controller exists, else reject.
    pub policy: Option<ConflictPolicy>,
    pub schedule: ExchangeSchedule,
    pub controller: Option<Controller>,
    /// Initial space contents written at tick 0; `_` leaves a cell blank.
    pub preload: String,
    /// Move budget for each arbitration run of the controller.
    pub arbiter_budget: u64,
    /// Default horizon for command-line runs.
    pub horizon: Option<Tick>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            members: Vec::new(),
            policy: None,
            schedule: ExchangeSchedule::Always,
            controller: None,
            preload: String::new(),
            arbiter_budget: DEFAULT_ARBITER_BUDGET,
            horizon: None,
        }
    }
}

impl GridConfig {
    pub fn new(members: Vec<Member>) -> Self {
        Self {
            members,
            ..Self::default()
        }
    }

    pub fn effective_policy(&self) -> ConflictPolicy {
        self.policy.unwrap_or(if self.controller.is_some() {
            ConflictPolicy::ControllerArbitrated
        } else {
            ConflictPolicy::Reject
        })
    }

    pub fn member(&self, id: &str) -> Option<&Member> {
        self.members.iter().find(|m| m.id == id)
    }

    pub fn member_mut(&mut self, id: &str) -> Option<&mut Member> {
        self.members.iter_mut().find(|m| m.id == id)
    }

    pub fn global_controller(&self) -> Option<&Controller> {
        self.controller
            .as_ref()
            .filter(|c| c.mode == ControlMode::Global)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("grid has no members")]
    NoMembers,
    #[error("id `{0}` must be non-empty, without whitespace, and not start with `@`")]
    BadId(String),
    #[error("duplicate member id `{0}`")]
    DuplicateId(String),
    #[error("controller id `{0}` clashes with a member id")]
    ControllerIdClash(String),
    #[error("a controlled grid has at most {MAX_CONTROLLED_MEMBERS} members")]
    TooManyMembers,
    #[error("schedule names unknown member `{0}`")]
    UnknownScheduleId(String),
    #[error("input given for unknown member `{0}`")]
    UnknownInputId(String),
    #[error("machine `{id}`: {report}")]
    Machine {
        id: String,
        report: ValidationReport,
    },
    #[error("input of `{id}`: {error}")]
    Input { id: String, error: InputError },
    #[error("arbitrated conflict policy needs a controller")]
    ArbitrationWithoutController,
    #[error("controller `{0}` may not write the space")]
    ControllerWritesSpace(String),
    #[error("preload may not contain `{0}`")]
    BadPreload(char),
    #[error("controller `{0}` needs an output tape")]
    ControllerWithoutOutput(String),
}

/// Per-member input overrides.
pub type Inputs = BTreeMap<String, String>;

fn check_id(id: &str) -> Result<(), ConfigError> {
    if id.is_empty() || id.starts_with('@') || id.contains(char::is_whitespace) {
        return Err(ConfigError::BadId(id.to_string()));
    }
    Ok(())
}

/// A validated grid: compiled machines plus the resolved configuration.
#[derive(Debug, Clone)]
pub struct Grid<'a> {
    pub config: &'a GridConfig,
    pub ids: Vec<Arc<str>>,
    pub machines: Vec<Machine>,
    /// State names per member, shared with trace events.
    pub state_names: Vec<Vec<Arc<str>>>,
    pub inputs: Vec<String>,
    pub controller: Option<(Arc<str>, Machine, Vec<Arc<str>>)>,
    pub policy: ConflictPolicy,
}

fn names(machine: &Machine) -> Vec<Arc<str>> {
    machine
        .spec()
        .states
        .iter()
        .map(|q| Arc::from(q.as_str()))
        .collect()
}

impl<'a> Grid<'a> {
    pub fn new(config: &'a GridConfig, inputs: &Inputs) -> Result<Self, ConfigError> {
        if config.members.is_empty() {
            return Err(ConfigError::NoMembers);
        }
        let mut seen = HashSet::new();
        for m in &config.members {
            check_id(&m.id)?;
            if !seen.insert(m.id.as_str()) {
                return Err(ConfigError::DuplicateId(m.id.clone()));
            }
        }
        for id in config.schedule.named_ids() {
            if !seen.contains(id.as_str()) {
                return Err(ConfigError::UnknownScheduleId(id.clone()));
            }
        }
        for id in inputs.keys() {
            if !seen.contains(id.as_str()) {
                return Err(ConfigError::UnknownInputId(id.clone()));
            }
        }
        let policy = config.effective_policy();
        if policy == ConflictPolicy::ControllerArbitrated && config.controller.is_none() {
            return Err(ConfigError::ArbitrationWithoutController);
        }

        let mut machines = Vec::with_capacity(config.members.len());
        let mut resolved_inputs = Vec::with_capacity(config.members.len());
        for m in &config.members {
            let machine = Machine::new(m.spec.clone()).map_err(|report| ConfigError::Machine {
                id: m.id.clone(),
                report,
            })?;
            let input = inputs.get(&m.id).unwrap_or(&m.input).clone();
            machine
                .check_input(&input)
                .map_err(|error| ConfigError::Input {
                    id: m.id.clone(),
                    error,
                })?;
            machines.push(machine);
            resolved_inputs.push(input);
        }

        let controller = match &config.controller {
            None => None,
            Some(c) => {
                check_id(&c.id)?;
                if seen.contains(c.id.as_str()) {
                    return Err(ConfigError::ControllerIdClash(c.id.clone()));
                }
                if config.members.len() > MAX_CONTROLLED_MEMBERS {
                    return Err(ConfigError::TooManyMembers);
                }
                if c.spec.rules.iter().any(|r| r.space != SpaceOp::Keep) {
                    return Err(ConfigError::ControllerWritesSpace(c.id.clone()));
                }
                if c.spec.tapes.outputs == 0 {
                    return Err(ConfigError::ControllerWithoutOutput(c.id.clone()));
                }
                let machine =
                    Machine::new(c.spec.clone()).map_err(|report| ConfigError::Machine {
                        id: c.id.clone(),
                        report,
                    })?;
                let states = names(&machine);
                Some((Arc::from(c.id.as_str()), machine, states))
            }
        };

        for c in config.preload.chars() {
            if is_reserved(c) {
                return Err(ConfigError::BadPreload(c));
            }
        }

        Ok(Self {
            config,
            ids: config
                .members
                .iter()
                .map(|m| Arc::from(m.id.as_str()))
                .collect(),
            state_names: machines.iter().map(names).collect(),
            machines,
            inputs: resolved_inputs,
            controller,
            policy,
        })
    }

    pub fn is_global(&self) -> bool {
        self.config.global_controller().is_some()
    }

    /// Preloaded cells, in cell order.
    pub fn preload(&self) -> impl Iterator<Item = (usize, Symbol)> + '_ {
        self.config
            .preload
            .chars()
            .enumerate()
            .map(|(i, c)| (i, Symbol(c)))
            .filter(|(_, s)| !s.is_blank())
    }
}

/// How fully interaction in a grid is governed by rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    Free,
    PartiallyFree,
    ImplicitlyProcedural,
    ExplicitlyProcedural,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Free => "free",
            Regime::PartiallyFree => "partially_free",
            Regime::ImplicitlyProcedural => "implicitly_procedural",
            Regime::ExplicitlyProcedural => "explicitly_procedural",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn classify(config: &GridConfig) -> Regime {
    if config.global_controller().is_some() {
        return Regime::ExplicitlyProcedural;
    }
    let with_rules = config
        .members
        .iter()
        .filter(|m| !m.rules.is_empty())
        .count();
    match with_rules {
        0 => Regime::Free,
        n if n == config.members.len() => Regime::ImplicitlyProcedural,
        _ => Regime::PartiallyFree,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{alternating_writers, idle_controller, with_idle_controller};

    #[test]
    fn regimes() {
        let mut cfg = alternating_writers();
        assert_eq!(classify(&cfg), Regime::ImplicitlyProcedural);
        cfg.members[1].rules.clear();
        assert_eq!(classify(&cfg), Regime::PartiallyFree);
        cfg.members[0].rules.clear();
        assert_eq!(classify(&cfg), Regime::Free);
        assert_eq!(
            classify(&with_idle_controller(cfg.clone())),
            Regime::ExplicitlyProcedural
        );
        cfg.controller = Some(Controller {
            id: "C".into(),
            spec: idle_controller(),
            mode: ControlMode::Local,
        });
        assert_eq!(classify(&cfg), Regime::Free);
    }

    #[test]
    fn regime_ignores_names_and_rule_order() {
        let mut cfg = alternating_writers();
        cfg.members[0].rules = vec!["x".into(), "y".into()];
        let before = classify(&cfg);
        cfg.members[0].rules.reverse();
        cfg.members[0].id = "renamed".into();
        cfg.members.swap(0, 1);
        assert_eq!(classify(&cfg), before);
    }

    #[test]
    fn default_policy_follows_controller() {
        let cfg = alternating_writers();
        assert_eq!(cfg.effective_policy(), ConflictPolicy::Reject);
        assert_eq!(
            with_idle_controller(cfg).effective_policy(),
            ConflictPolicy::ControllerArbitrated
        );
    }

    #[test]
    fn controller_validation() {
        let mut cfg = with_idle_controller(alternating_writers());
        cfg.controller.as_mut().unwrap().id = "A".into();
        assert_eq!(
            Grid::new(&cfg, &Inputs::new()).unwrap_err(),
            ConfigError::ControllerIdClash("A".into())
        );
        let mut cfg = with_idle_controller(alternating_writers());
        cfg.controller.as_mut().unwrap().spec = cfg.members[0].spec.clone();
        assert_eq!(
            Grid::new(&cfg, &Inputs::new()).unwrap_err(),
            ConfigError::ControllerWritesSpace("C".into())
        );
        assert_eq!(
            Grid::new(&GridConfig::default(), &Inputs::new()).unwrap_err(),
            ConfigError::NoMembers
        );
    }
}
