//! Flattening controlled grids into one sequential execution, and
//! dovetailed enumeration of a machine's outputs.
//!
//! A grid whose members all run on rational scales, under a computable
//! schedule and a global controller, can be compiled into a single
//! instruction stream over one combined state. [`flatten`] does so or
//! names the first premise that fails; [`check_equivalence`] runs both
//! the grid and its flat form and compares everything they produce.

use std::fmt;

use thiserror::Error;

use crate::constructions::OracleRole;
use crate::grid::{
    arbitrate, run_grid, ConfigError, ControlMode, DirectiveDecoder, Grid, GridConfig, GridError,
    Inputs, Permission, PRELOAD_WRITER,
};
use crate::machine::{
    run, InputError, Machine, MachineConfig, MachineSpec, Outcome, ScratchSpace, SpaceView,
    SpaceWrite, Step, Symbol, BLANK,
};
use crate::schedule::{ExchangeSchedule, TimeScale};
use crate::space::{ConflictPolicy, WriteEvent};
use crate::Tick;

/// A feature of a grid that rules out flattening, each one a way for
/// information from outside any fixed algorithm to enter the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Premise {
    /// A member's input carries injected data.
    InitialInformation,
    /// A member replays injected data to the others.
    SuperrecursivePartner,
    /// Injected data chooses the cells being written.
    UncoordinatedSpace,
    /// Injected data decides who may touch the space when.
    InjectedSchedule,
    /// A member's scale is an irrational stretch of the global clock.
    IrrationalScale,
    /// A member's scale is an arbitrary tick table.
    NonUniformScale,
    /// No controller organizes the interaction.
    MissingController,
    /// The controller only settles conflicts.
    LocalControlOnly,
}

impl Premise {
    pub fn name(self) -> &'static str {
        match self {
            Premise::InitialInformation => "initial-information",
            Premise::SuperrecursivePartner => "superrecursive-partner",
            Premise::UncoordinatedSpace => "uncoordinated-space",
            Premise::InjectedSchedule => "injected-schedule",
            Premise::IrrationalScale => "irrational-scale",
            Premise::NonUniformScale => "non-uniform-scale",
            Premise::MissingController => "missing-controller",
            Premise::LocalControlOnly => "local-control-only",
        }
    }
}

impl fmt::Display for Premise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlattenError {
    #[error("not flattenable: {0}")]
    NotFlattenable(Premise),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// The first failing premise, or `None` when the grid can be flattened.
pub fn blocking_premise(config: &GridConfig) -> Option<Premise> {
    for m in &config.members {
        if let Some(o) = &m.oracle {
            return Some(match o.role {
                OracleRole::InitialInformation => Premise::InitialInformation,
                OracleRole::PartnerOutput => Premise::SuperrecursivePartner,
                OracleRole::CellChoice => Premise::UncoordinatedSpace,
                OracleRole::ExchangeSchedule => Premise::InjectedSchedule,
            });
        }
    }
    if config.schedule.is_injected() {
        return Some(Premise::InjectedSchedule);
    }
    for m in &config.members {
        match m.scale {
            TimeScale::Irrational(_) => return Some(Premise::IrrationalScale),
            TimeScale::Table(_) => return Some(Premise::NonUniformScale),
            TimeScale::Identity | TimeScale::Rational { .. } => {}
        }
    }
    match &config.controller {
        None => Some(Premise::MissingController),
        Some(c) if c.mode == ControlMode::Local => Some(Premise::LocalControlOnly),
        Some(_) => None,
    }
}

struct FlatMember {
    id: String,
    machine: Machine,
    input: String,
    /// Moves per `ticks` global ticks.
    moves: u64,
    ticks: u64,
}

/// One sequential program equivalent to a controlled grid.
pub struct FlatExecution {
    members: Vec<FlatMember>,
    controller: Machine,
    policy: ConflictPolicy,
    schedule: ExchangeSchedule,
    preload: Vec<Symbol>,
    arbiter_budget: u64,
}

pub fn flatten(config: &GridConfig) -> Result<FlatExecution, FlattenError> {
    if let Some(p) = blocking_premise(config) {
        return Err(FlattenError::NotFlattenable(p));
    }
    let grid = Grid::new(config, &Inputs::new())?;
    let members = config
        .members
        .iter()
        .zip(grid.machines)
        .zip(grid.inputs)
        .map(|((m, machine), input)| {
            let (moves, ticks) = match m.scale {
                TimeScale::Rational { moves, ticks } => (moves, ticks),
                _ => (1, 1),
            };
            FlatMember {
                id: m.id.clone(),
                machine,
                input,
                moves,
                ticks,
            }
        })
        .collect();
    Ok(FlatExecution {
        members,
        controller: grid
            .controller
            .expect("flattenable grids have a controller")
            .1,
        policy: grid.policy,
        schedule: config.schedule.clone(),
        preload: config.preload.chars().map(Symbol).collect(),
        arbiter_budget: config.arbiter_budget,
    })
}

/// One instruction of the flat program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Instruction {
    /// Start of a global tick.
    Tick(Tick),
    /// The controller moves and its directives take effect.
    Control,
    /// Member `i` moves.
    Step(usize),
    /// The tick's pending writes are committed.
    Commit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatRun {
    pub writes: Vec<WriteEvent>,
    pub space: String,
    pub outputs: Vec<(String, Vec<String>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlatError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unresolved conflict at tick {tick}, cell {cell}")]
    UnresolvedConflict { tick: Tick, cell: usize },
    #[error("malformed directive at tick {tick}")]
    Directive { tick: Tick },
}

struct Cells<'a> {
    cells: &'a [Symbol],
    permission: Permission,
}

impl SpaceView for Cells<'_> {
    fn read(&self, cell: usize) -> Symbol {
        if self.permission.can_read(cell) {
            self.cells.get(cell).copied().unwrap_or(BLANK)
        } else {
            BLANK
        }
    }
}

/// Everything the flat interpreter mutates.
struct FlatState {
    configs: Vec<MachineConfig>,
    terminal: Vec<bool>,
    permissions: Vec<Permission>,
    controller: MachineConfig,
    controller_running: bool,
    decoder: DirectiveDecoder,
    cells: Vec<Symbol>,
    writes: Vec<WriteEvent>,
    pending_at: Vec<(usize, usize, Symbol)>,
    pending_append: Vec<(usize, Symbol)>,
}

impl FlatState {
    fn put(&mut self, tick: Tick, writer: &str, cell: usize, symbol: Symbol) {
        if cell >= self.cells.len() {
            self.cells.resize(cell + 1, BLANK);
        }
        self.cells[cell] = symbol;
        self.writes.push(WriteEvent {
            tick,
            writer: writer.to_string(),
            cell,
            symbol,
        });
    }
}

impl FlatExecution {
    /// Whether member `i` has a move at tick `t`: its move count
    /// `floor(t * moves / ticks)` steps up at `t`.
    fn moves_at(&self, i: usize, t: Tick) -> bool {
        let m = &self.members[i];
        (t * m.moves) / m.ticks > ((t - 1) * m.moves) / m.ticks
    }

    fn admitted(&self, i: usize, t: Tick) -> bool {
        let id = &self.members[i].id;
        match &self.schedule {
            ExchangeSchedule::Always => true,
            ExchangeSchedule::Cycle(ids) => {
                !ids.is_empty() && &ids[((t - 1) as usize) % ids.len()] == id
            }
            random @ ExchangeSchedule::Random { .. } => random.admits(t, id),
            ExchangeSchedule::Injected(_) => unreachable!("rejected by flatten"),
        }
    }

    /// The instruction stream for `horizon` ticks. Scheduling is fully
    /// resolved here: the interpreter never consults scales or schedule.
    pub fn program(&self, horizon: Tick) -> Vec<Instruction> {
        let mut out = Vec::new();
        for t in 1..=horizon {
            out.push(Instruction::Tick(t));
            out.push(Instruction::Control);
            for i in 0..self.members.len() {
                if self.moves_at(i, t) && self.admitted(i, t) {
                    out.push(Instruction::Step(i));
                }
            }
            out.push(Instruction::Commit);
        }
        out
    }

    pub fn run(&self, inputs: &Inputs, horizon: Tick) -> Result<FlatRun, FlatError> {
        for id in inputs.keys() {
            if !self.members.iter().any(|m| &m.id == id) {
                return Err(ConfigError::UnknownInputId(id.clone()).into());
            }
        }
        let configs = self
            .members
            .iter()
            .map(|m| {
                let input = inputs.get(&m.id).unwrap_or(&m.input);
                m.machine
                    .initial_config(input)
                    .map_err(|error: InputError| ConfigError::Input {
                        id: m.id.clone(),
                        error,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n = self.members.len();
        let mut st = FlatState {
            configs,
            terminal: vec![false; n],
            permissions: vec![Permission::default(); n],
            controller: self.controller.initial_config("").expect("empty input"),
            controller_running: true,
            decoder: DirectiveDecoder::default(),
            cells: Vec::new(),
            writes: Vec::new(),
            pending_at: Vec::new(),
            pending_append: Vec::new(),
        };
        for (cell, &s) in self.preload.iter().enumerate() {
            if !s.is_blank() {
                st.put(0, PRELOAD_WRITER, cell, s);
            }
        }

        let mut tick = 0;
        for instruction in self.program(horizon) {
            match instruction {
                Instruction::Tick(t) => {
                    if st.terminal.iter().all(|&x| x) {
                        break;
                    }
                    tick = t;
                }
                Instruction::Control => self.control(&mut st, tick)?,
                Instruction::Step(i) => self.step(&mut st, i),
                Instruction::Commit => self.commit(&mut st, tick)?,
            }
        }

        Ok(FlatRun {
            space: st.cells.iter().map(|s| s.0).collect(),
            writes: st.writes,
            outputs: self
                .members
                .iter()
                .zip(&st.configs)
                .map(|(m, c)| (m.id.clone(), c.output_words()))
                .collect(),
        })
    }

    fn control(&self, st: &mut FlatState, tick: Tick) -> Result<(), FlatError> {
        if !st.controller_running {
            return Ok(());
        }
        let view = Cells {
            cells: &st.cells,
            permission: Permission::default(),
        };
        match self.controller.step(&mut st.controller, &view) {
            Step::Moved(_) => {
                let directives = st
                    .decoder
                    .feed(&st.controller.outputs[0], self.members.len())
                    .map_err(|_| FlatError::Directive { tick })?;
                for d in directives {
                    st.permissions[d.member] = d.permission;
                }
            }
            Step::Halted | Step::Stuck => st.controller_running = false,
        }
        Ok(())
    }

    fn step(&self, st: &mut FlatState, i: usize) {
        let permission = st.permissions[i];
        if st.terminal[i] || permission.blocked() {
            return;
        }
        let machine = &self.members[i].machine;
        let view = Cells {
            cells: &st.cells,
            permission,
        };
        match machine.step(&mut st.configs[i], &view) {
            Step::Moved(effects) => {
                match effects.space_write {
                    Some(SpaceWrite::At { cell, symbol }) if permission.can_write(cell) => {
                        st.pending_at.push((cell, i, symbol))
                    }
                    Some(SpaceWrite::Append(symbol)) => st.pending_append.push((i, symbol)),
                    _ => {}
                }
                if machine.is_final(st.configs[i].state) {
                    st.terminal[i] = true;
                }
            }
            Step::Halted | Step::Stuck => st.terminal[i] = true,
        }
    }

    fn commit(&self, st: &mut FlatState, tick: Tick) -> Result<(), FlatError> {
        let mut at = std::mem::take(&mut st.pending_at);
        at.sort_by_key(|&(cell, member, _)| (cell, member));
        for group in at.chunk_by(|a, b| a.0 == b.0) {
            let cell = group[0].0;
            let unanimous = group.iter().all(|w| w.2 == group[0].2);
            let winner = if unanimous {
                group[0].2
            } else {
                let contenders: Vec<(usize, Symbol)> = group.iter().map(|w| (w.1, w.2)).collect();
                let chosen = match self.policy {
                    ConflictPolicy::Reject => None,
                    ConflictPolicy::PriorityOrder => Some(group[group.len() - 1].2),
                    ConflictPolicy::ControllerArbitrated => {
                        arbitrate(&self.controller, &contenders, self.arbiter_budget)
                    }
                };
                chosen.ok_or(FlatError::UnresolvedConflict { tick, cell })?
            };
            for &(_, member, symbol) in group {
                if symbol == winner {
                    st.put(tick, &self.members[member].id, cell, symbol);
                }
            }
        }
        for (member, symbol) in std::mem::take(&mut st.pending_append) {
            let cell = st
                .cells
                .iter()
                .position(|s| s.is_blank())
                .unwrap_or(st.cells.len());
            if st.permissions[member].can_write(cell) {
                st.put(tick, &self.members[member].id, cell, symbol);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equal,
    /// The first difference found, described for a human.
    Divergence(String),
}

fn grid_outcome(e: &GridError) -> Result<String, FlattenError> {
    match e {
        GridError::Config(c) => Err(c.clone().into()),
        GridError::UnresolvedConflict { tick, cell, .. } => {
            Ok(format!("unresolved conflict at tick {tick}, cell {cell}"))
        }
        GridError::Directive { tick, .. } => Ok(format!("malformed directive at tick {tick}")),
    }
}

/// Runs the grid and its flat form to `horizon` and compares their
/// writes, spaces and outputs. Runs that fail must fail alike.
pub fn check_equivalence(
    config: &GridConfig,
    inputs: &Inputs,
    horizon: Tick,
) -> Result<Equivalence, FlattenError> {
    let flat = flatten(config)?;
    let concurrent = run_grid(config, inputs, horizon);
    let sequential = flat.run(inputs, horizon);
    let (grid, flat) = match (concurrent, sequential) {
        (Ok(g), Ok(f)) => (g, f),
        (Err(g), Err(FlatError::Config(c))) => {
            grid_outcome(&g)?;
            return Err(c.into());
        }
        (Err(g), Err(f)) => {
            let g = grid_outcome(&g)?;
            return Ok(if g == f.to_string() {
                Equivalence::Equal
            } else {
                Equivalence::Divergence(format!("grid: {g}; flat: {f}"))
            });
        }
        (Err(g), Ok(_)) => {
            return Ok(Equivalence::Divergence(format!(
                "grid: {}; flat finished",
                grid_outcome(&g)?
            )))
        }
        (Ok(_), Err(f)) => return Ok(Equivalence::Divergence(format!("grid finished; flat: {f}"))),
    };
    let log = grid.space.log();
    for k in 0..log.len().max(flat.writes.len()) {
        let (a, b) = (log.get(k), flat.writes.get(k));
        if a != b {
            let show =
                |w: Option<&WriteEvent>| w.map_or("nothing".to_string(), |w| format!("`{w}`"));
            return Ok(Equivalence::Divergence(format!(
                "write {k}: grid {}, flat {}",
                show(a),
                show(b)
            )));
        }
    }
    if grid.space.contents() != flat.space {
        return Ok(Equivalence::Divergence(format!(
            "space: grid `{}`, flat `{}`",
            grid.space.contents(),
            flat.space
        )));
    }
    if grid.outputs != flat.outputs {
        return Ok(Equivalence::Divergence(format!(
            "outputs: grid {:?}, flat {:?}",
            grid.outputs, flat.outputs
        )));
    }
    Ok(Equivalence::Equal)
}

/// A computable enumeration of input words.
pub trait WordOrder {
    /// The word at `index`, or `None` once the order is exhausted.
    fn word(&self, index: usize) -> Option<String>;
}

/// Nonempty words ordered by length, then lexicographically by the
/// position of each symbol in `alphabet`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LengthLex {
    pub alphabet: Vec<char>,
}

impl LengthLex {
    pub fn new(alphabet: &[char]) -> Self {
        Self {
            alphabet: alphabet.to_vec(),
        }
    }

    pub fn binary() -> Self {
        Self::new(&['0', '1'])
    }
}

impl WordOrder for LengthLex {
    fn word(&self, index: usize) -> Option<String> {
        let k = self.alphabet.len();
        if k == 0 {
            return None;
        }
        // Skip whole length classes, then write the rest in base k.
        let mut rest = index as u128;
        let mut len = 1u32;
        let mut class = k as u128;
        while rest >= class {
            rest -= class;
            len += 1;
            class = class.checked_mul(k as u128)?;
        }
        let mut digits = vec![self.alphabet[0]; len as usize];
        for slot in digits.iter_mut().rev() {
            *slot = self.alphabet[(rest % k as u128) as usize];
            rest /= k as u128;
        }
        Some(digits.into_iter().collect())
    }
}

/// An order given by a machine: the word at index `i` is what the machine
/// writes on output tape 0 when started on `i` ones, provided it halts
/// within `budget` moves.
pub struct MachineOrder {
    pub machine: Machine,
    pub budget: u64,
}

impl WordOrder for MachineOrder {
    fn word(&self, index: usize) -> Option<String> {
        let r = run(&self.machine, &"1".repeat(index), self.budget).ok()?;
        (r.outcome == Outcome::Halted).then(|| r.outputs.into_iter().next().unwrap_or_default())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificateEntry {
    /// Position of the input in the word order.
    pub index: usize,
    pub input: String,
    /// Output tape 0 when the run halted.
    pub output: String,
    /// Moves the run took.
    pub budget: u64,
    /// Dovetail stage at which the run halted.
    pub stage: u64,
}

impl fmt::Display for CertificateEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {}",
            self.index, self.input, self.output, self.budget, self.stage
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnumerationCertificate {
    pub entries: Vec<CertificateEntry>,
}

impl EnumerationCertificate {
    /// One `index input output budget stage` line per entry.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn outputs(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.output.as_str())
    }

    /// Re-runs every entry directly; the first entry that does not
    /// reproduce, if any.
    pub fn first_unsound(&self, machine: &Machine) -> Option<&CertificateEntry> {
        self.entries
            .iter()
            .find(|e| match run(machine, &e.input, e.budget) {
                Ok(r) => r.outcome != Outcome::Halted || r.outputs.first() != Some(&e.output),
                Err(_) => true,
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerationError {
    #[error("machine is invalid: {0}")]
    Invalid(#[from] crate::machine::ValidationReport),
    #[error("machine has no output tape")]
    NoOutputTape,
    #[error("input {index} `{word}`: {error}")]
    Input {
        index: usize,
        word: String,
        error: InputError,
    },
}

struct Active {
    index: usize,
    input: String,
    config: MachineConfig,
    scratch: ScratchSpace,
}

/// Dovetails runs over the inputs of `order`. Stage `s` (1-based) admits
/// input `s - 1`, unless `input_limit` inputs are already admitted or the
/// order is exhausted, and then gives every unfinished run one move. Runs
/// that halt with a nonempty output on tape 0 are recorded in the order
/// they halt.
pub fn enumerate_outputs(
    spec: &MachineSpec,
    order: &dyn WordOrder,
    diagonal_budget: u64,
    input_limit: Option<usize>,
) -> Result<EnumerationCertificate, EnumerationError> {
    if spec.tapes.outputs == 0 {
        return Err(EnumerationError::NoOutputTape);
    }
    let machine = Machine::new(spec.clone())?;
    let mut active: Vec<Active> = Vec::new();
    let mut admitted = 0usize;
    let mut exhausted = false;
    let mut cert = EnumerationCertificate::default();

    for stage in 1..=diagonal_budget {
        if !exhausted && input_limit.is_none_or(|l| admitted < l) {
            match order.word(admitted) {
                Some(word) => {
                    let config =
                        machine
                            .initial_config(&word)
                            .map_err(|error| EnumerationError::Input {
                                index: admitted,
                                word: word.clone(),
                                error,
                            })?;
                    active.push(Active {
                        index: admitted,
                        input: word,
                        config,
                        scratch: ScratchSpace::default(),
                    });
                    admitted += 1;
                }
                None => exhausted = true,
            }
        }
        active.retain_mut(|run| match machine.step(&mut run.config, &run.scratch) {
            Step::Moved(effects) => {
                if let Some(w) = effects.space_write {
                    run.scratch.apply(w);
                }
                if !machine.is_final(run.config.state) {
                    return true;
                }
                let output: String = run.config.outputs[0].iter().map(|s| s.0).collect();
                if !output.is_empty() {
                    cert.entries.push(CertificateEntry {
                        index: run.index,
                        input: run.input.clone(),
                        output,
                        budget: run.config.local_clock,
                        stage,
                    });
                }
                false
            }
            Step::Halted | Step::Stuck => false,
        });
    }
    Ok(cert)
}

/// A machine that reads its input's length `n` and emits `words[n]`, or
/// halts silently when `n >= words.len()`. The finite sets it can
/// enumerate are exactly the sets of its nonempty `words`.
pub fn finite_set_emitter(words: &[&str], input_alphabet: &[char]) -> MachineSpec {
    let mut alphabet: Vec<char> = vec!['_'];
    for c in input_alphabet
        .iter()
        .copied()
        .chain(words.iter().flat_map(|w| w.chars()))
    {
        if !alphabet.contains(&c) {
            alphabet.push(c);
        }
    }
    let mut states = vec!["done".to_string()];
    let mut outputs = vec!["done".to_string()];
    let mut rules = Vec::new();
    let n = words.len();
    for (k, w) in words.iter().enumerate() {
        states.push(format!("len{k}"));
        rules.push(format!("rule: len{k} _* -> out{k}_0 - SS"));
        let next = if k + 1 < n {
            format!("len{}", k + 1)
        } else {
            "done".into()
        };
        for &c in input_alphabet {
            rules.push(format!("rule: len{k} {c}* -> {next} - RS"));
        }
        let chars: Vec<char> = w.chars().collect();
        for j in 0..=chars.len() {
            states.push(format!("out{k}_{j}"));
            if j > 0 {
                outputs.push(format!("out{k}_{j}"));
            }
        }
        for (j, c) in chars.iter().enumerate() {
            rules.push(format!(
                "rule: out{k}_{j} ** -> out{k}_{} - SS emit {c} -> 0",
                j + 1
            ));
        }
        rules.push(format!("rule: out{k}_{} ** -> done - SS", chars.len()));
    }
    let start = if n == 0 { "done" } else { "len0" };
    let text = format!(
        "alphabet: {}\nstates: {}\noutput_states: {}\nfinal_states: done\nstart: {start}\n\
         tapes: input work output\n{}\n",
        alphabet
            .iter()
            .map(char::to_string)
            .collect::<Vec<_>>()
            .join(" "),
        states.join(" "),
        outputs.join(" "),
        rules.join("\n"),
    );
    crate::machine::format::parse(&text).expect("generated emitter parses")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("cut {cut} is out of order or outside 1..{len}")]
    BadCut { cut: usize, len: usize },
    #[error("machine is invalid: {0}")]
    Invalid(#[from] crate::machine::ValidationReport),
    #[error("segment {index}: {error}")]
    Input { index: usize, error: InputError },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentOutput {
    pub segment: String,
    pub output: String,
}

/// Splits `stream` before each cut position and runs `spec` on every
/// segment for at most `budget` moves.
pub fn partition_harness(
    stream: &str,
    cuts: &[usize],
    spec: &MachineSpec,
    budget: u64,
) -> Result<Vec<SegmentOutput>, PartitionError> {
    let chars: Vec<char> = stream.chars().collect();
    let mut bounds = vec![0];
    for &cut in cuts {
        if cut <= *bounds.last().expect("nonempty") || cut >= chars.len() {
            return Err(PartitionError::BadCut {
                cut,
                len: chars.len(),
            });
        }
        bounds.push(cut);
    }
    bounds.push(chars.len());
    let machine = Machine::new(spec.clone())?;
    bounds
        .windows(2)
        .enumerate()
        .map(|(index, w)| {
            let segment: String = chars[w[0]..w[1]].iter().collect();
            let r = run(&machine, &segment, budget)
                .map_err(|error| PartitionError::Input { index, error })?;
            Ok(SegmentOutput {
                segment,
                output: r.outputs.into_iter().next().unwrap_or_default(),
            })
        })
        .collect()
}
