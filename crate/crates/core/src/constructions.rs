//! Ready-made grids for the interaction scenarios: writer pairs on
//! different time scales, externally injected data (initial information,
//! a partner's output, an exchange schedule, a choice of cells), and the
//! pair-cell encoder with its decoder.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::grid::{
    run_grid, ControlMode, Controller, GridConfig, GridError, GridRun, Inputs, Member,
};
use crate::machine::{format, MachineSpec};
use crate::schedule::{ExchangeSchedule, TimeScale};
use crate::Tick;

/// How a grid consumes an externally supplied bit string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OracleRole {
    /// The bits sit on a member's input tape.
    InitialInformation,
    /// A partner member writes the bits into the space.
    PartnerOutput,
    /// The bits decide which member may touch the space at each tick.
    ExchangeSchedule,
    /// The bits decide which cell of each pair receives a write.
    CellChoice,
}

impl OracleRole {
    pub const ALL: [OracleRole; 4] = [
        OracleRole::InitialInformation,
        OracleRole::PartnerOutput,
        OracleRole::ExchangeSchedule,
        OracleRole::CellChoice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleRole::InitialInformation => "initial-information",
            OracleRole::PartnerOutput => "partner-output",
            OracleRole::ExchangeSchedule => "exchange-schedule",
            OracleRole::CellChoice => "cell-choice",
        }
    }
}

impl fmt::Display for OracleRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown oracle role `{s}`"))
    }
}

/// A finite binary word supplied from outside the grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OracleStream {
    pub bits: String,
    pub role: OracleRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructionError {
    #[error("oracle is empty")]
    EmptyOracle,
    #[error("oracle may only contain 0 and 1, found `{0}`")]
    NonBinary(char),
    #[error("oracle has role {found}, expected {expected}")]
    WrongRole {
        expected: OracleRole,
        found: OracleRole,
    },
    #[error("unknown construction `{0}`")]
    Unknown(String),
    #[error("construction `{0}` needs --oracle")]
    OracleRequired(String),
}

impl OracleStream {
    pub fn new(bits: impl Into<String>, role: OracleRole) -> Result<Self, ConstructionError> {
        let bits = bits.into();
        if bits.is_empty() {
            return Err(ConstructionError::EmptyOracle);
        }
        if let Some(c) = bits.chars().find(|c| !matches!(c, '0' | '1')) {
            return Err(ConstructionError::NonBinary(c));
        }
        Ok(Self { bits, role })
    }

    fn expect(&self, role: OracleRole) -> Result<&str, ConstructionError> {
        if self.role != role {
            return Err(ConstructionError::WrongRole {
                expected: role,
                found: self.role,
            });
        }
        Self::new(self.bits.clone(), role)?;
        Ok(&self.bits)
    }
}

fn machine(text: &str) -> MachineSpec {
    format::parse(text).expect("built-in machine description parses")
}

/// Appends `symbol` on every other move, starting with the first or the
/// second.
fn alternating_writer(symbol: char, on_odd_moves: bool) -> MachineSpec {
    let (odd, even) = if on_odd_moves {
        (format!("-+{symbol}"), "--".to_string())
    } else {
        ("--".to_string(), format!("-+{symbol}"))
    };
    machine(&format!(
        "alphabet: _ 0 1\nstates: odd even\nstart: odd\ntapes: input work space\n\
         rule: odd *** -> even {odd} SSS\n\
         rule: even *** -> odd {even} SSS\n"
    ))
}

/// Appends `symbol` on every move.
fn steady_writer(symbol: char) -> MachineSpec {
    machine(&format!(
        "alphabet: _ 0 1\nstates: w\nstart: w\ntapes: input work space\n\
         rule: w *** -> w -+{symbol} SSS\n"
    ))
}

const FIRST_FREE: &str = "first-free";

/// A writes `0` on its even moves, B writes `1` on its odd moves, each
/// into the leftmost blank cell. Both run on identity scales.
pub fn alternating_writers() -> GridConfig {
    alternating_writers_on(TimeScale::Identity, TimeScale::Identity)
}

pub fn alternating_writers_on(a: TimeScale, b: TimeScale) -> GridConfig {
    GridConfig::new(vec![
        Member::new("A", alternating_writer('0', false))
            .with_scale(a)
            .with_rules(&[FIRST_FREE]),
        Member::new("B", alternating_writer('1', true))
            .with_scale(b)
            .with_rules(&[FIRST_FREE]),
    ])
}

/// The writer pair where B's first move comes only at tick 10 and both
/// then run in step. The space starts with extra zeros from A.
pub fn desync_writers(horizon: Tick) -> GridConfig {
    let ticks = (10..=horizon.max(10)).collect();
    alternating_writers_on(
        TimeScale::Identity,
        TimeScale::table(ticks).expect("increasing ticks from 10"),
    )
}

/// The writer pair with A stretched by sqrt(2) against B.
pub fn beatty_writers() -> GridConfig {
    alternating_writers_on(
        TimeScale::irrational("sqrt2").expect("sqrt2 is a known scale"),
        TimeScale::Identity,
    )
}

/// A controller that never issues a directive and never settles a
/// conflict: full access for everyone.
pub fn idle_controller() -> MachineSpec {
    machine(
        "alphabet: _\nstates: idle\nstart: idle\ntapes: input work output\n\
         rule: idle ** -> idle - SS\n",
    )
}

pub fn with_idle_controller(mut config: GridConfig) -> GridConfig {
    config.controller = Some(Controller {
        id: "C".into(),
        spec: idle_controller(),
        mode: ControlMode::Global,
    });
    config
}

/// Fills the sibling of each pair cell with `0` once the other cell of
/// the pair holds `1`.
pub fn pair_cell_filler() -> MachineSpec {
    machine(
        "alphabet: _ 0 1\nstates: look peek fill_right fill_left skip\nstart: look\n\
         tapes: input work space\n\
         rule: look **_ -> peek -- SSR\n\
         rule: look **1 -> fill_right -- SSR\n\
         rule: peek **_ -> look -- SSL\n\
         rule: peek **1 -> fill_left -- SSL\n\
         rule: fill_right *** -> look -0 SSR\n\
         rule: fill_left *** -> skip -0 SSR\n\
         rule: skip *** -> look -- SSR\n",
    )
}

/// Reads bits from its input. Bit `n` (0-based) puts `1` into cell `2n`
/// for a 1 and into cell `2n + 1` for a 0. Two moves per bit.
pub fn pair_cell_writer() -> MachineSpec {
    machine(
        "alphabet: _ 0 1\nstates: bit skip put done\nfinal_states: done\nstart: bit\n\
         tapes: input work space\n\
         rule: bit 1** -> skip -1 SSR\n\
         rule: skip *** -> bit -- RSR\n\
         rule: bit 0** -> put -- SSR\n\
         rule: put *** -> bit -1 RSR\n\
         rule: bit _** -> done -- SSS\n",
    )
}

/// Scans pair cells left to right and emits `1` for `10`, `0` for `01`.
/// Waits on blank cells; gets stuck on any other pair.
pub fn pair_cell_decoder() -> MachineSpec {
    machine(
        "alphabet: _ 0 1\nstates: pair zero one\noutput_states: pair\nstart: pair\n\
         tapes: input work output space\n\
         rule: pair **_ -> pair -- SSS\n\
         rule: pair **0 -> zero -- SSR\n\
         rule: pair **1 -> one -- SSR\n\
         rule: zero **_ -> zero -- SSS\n\
         rule: zero **1 -> pair -- SSR emit 0 -> 0\n\
         rule: one **_ -> one -- SSS\n\
         rule: one **0 -> pair -- SSR emit 1 -> 0\n",
    )
}

/// B marks one cell of each pair as the oracle dictates; A fills the
/// other with `0`.
///
/// Pair `n` (1-based) covers the 1-based cells `2n - 1` and `2n`, that is
/// the 0-based cells `2n - 2` and `2n - 1`; the writer works in 0-based
/// cells throughout.
pub fn pair_cell_encoder(oracle: &OracleStream) -> Result<GridConfig, ConstructionError> {
    let bits = oracle.expect(OracleRole::CellChoice)?;
    let mut writer = Member::new("B", pair_cell_writer()).with_input(bits);
    writer.oracle = Some(oracle.clone());
    Ok(GridConfig::new(vec![
        Member::new("A", pair_cell_filler()),
        writer,
    ]))
}

/// The encoder grid with the decoder as a third member, `D`.
pub fn pair_cell_round_trip(oracle: &OracleStream) -> Result<GridConfig, ConstructionError> {
    let mut config = pair_cell_encoder(oracle)?;
    config.members.push(Member::new("D", pair_cell_decoder()));
    Ok(config)
}

/// Enough ticks for every pair to be written, filled and decoded.
pub fn pair_cell_horizon(bits: usize) -> Tick {
    6 * bits as Tick + 8
}

/// A single finite-state copier whose input is the oracle.
pub fn oracle_initial_info(oracle: &OracleStream) -> Result<GridConfig, ConstructionError> {
    let bits = oracle.expect(OracleRole::InitialInformation)?;
    let mut copier = Member::new("A", input_copier()).with_input(bits);
    copier.oracle = Some(oracle.clone());
    Ok(GridConfig::new(vec![copier]))
}

pub fn input_copier() -> MachineSpec {
    machine(
        "alphabet: _ 0 1\nstates: copy done\noutput_states: copy\nfinal_states: done\n\
         start: copy\ntapes: input work output\n\
         rule: copy 0* -> copy - RS emit 0 -> 0\n\
         rule: copy 1* -> copy - RS emit 1 -> 0\n\
         rule: copy _* -> done - SS\n",
    )
}

/// Copies space cells to its output as they fill, left to right.
pub fn space_copier() -> MachineSpec {
    machine(
        "alphabet: _ 0 1\nstates: read\noutput_states: read\nstart: read\n\
         tapes: input work output space\n\
         rule: read **_ -> read -- SSS\n\
         rule: read **0 -> read -- SSR emit 0 -> 0\n\
         rule: read **1 -> read -- SSR emit 1 -> 0\n",
    )
}

/// Appends `word` to the space, one symbol per move, then halts.
pub fn scripted_emitter(word: &str) -> MachineSpec {
    let n = word.chars().count();
    let states: Vec<String> = (0..=n).map(|i| format!("s{i}")).collect();
    let mut text = format!(
        "alphabet: _ 0 1\nstates: {}\nfinal_states: s{n}\nstart: s0\ntapes: input work space\n",
        states.join(" ")
    );
    for (i, c) in word.chars().enumerate() {
        text.push_str(&format!("rule: s{i} *** -> s{} -+{c} SSS\n", i + 1));
    }
    machine(&text)
}

/// B replays the oracle into the space; A copies the space to its output.
pub fn oracle_partner(oracle: &OracleStream) -> Result<GridConfig, ConstructionError> {
    let bits = oracle.expect(OracleRole::PartnerOutput)?;
    let mut partner = Member::new("B", scripted_emitter(bits));
    partner.oracle = Some(oracle.clone());
    Ok(GridConfig::new(vec![
        Member::new("A", space_copier()),
        partner,
    ]))
}

/// Two writers appending on every move, A `0` and B `1`. Tick `t` admits
/// only A when oracle bit `t` is 1 and only B when it is 0.
pub fn scheduled_exchange(oracle: &OracleStream) -> Result<GridConfig, ConstructionError> {
    let bits = oracle.expect(OracleRole::ExchangeSchedule)?;
    let mut config = GridConfig::new(vec![
        Member::new("A", steady_writer('0')).with_rules(&[FIRST_FREE]),
        Member::new("B", steady_writer('1')).with_rules(&[FIRST_FREE]),
    ]);
    config.schedule = ExchangeSchedule::Injected(
        bits.chars()
            .map(|c| if c == '1' { "A" } else { "B" }.to_string())
            .collect(),
    );
    Ok(config)
}

/// Names accepted by [`construct`].
pub const CONSTRUCTIONS: [&str; 8] = [
    "alternating",
    "desync",
    "beatty",
    "controlled",
    "pair-cell",
    "initial-info",
    "partner",
    "scheduled-exchange",
];

/// Builds a named construction. `horizon` sizes the desync table.
pub fn construct(
    name: &str,
    oracle: Option<&str>,
    horizon: Tick,
) -> Result<GridConfig, ConstructionError> {
    let stream = |role| {
        let bits = oracle.ok_or_else(|| ConstructionError::OracleRequired(name.to_string()))?;
        OracleStream::new(bits, role)
    };
    match name {
        "alternating" => Ok(alternating_writers()),
        "desync" => Ok(desync_writers(horizon)),
        "beatty" => Ok(beatty_writers()),
        "controlled" => Ok(with_idle_controller(alternating_writers())),
        "pair-cell" => pair_cell_round_trip(&stream(OracleRole::CellChoice)?),
        "initial-info" => oracle_initial_info(&stream(OracleRole::InitialInformation)?),
        "partner" => oracle_partner(&stream(OracleRole::PartnerOutput)?),
        "scheduled-exchange" => scheduled_exchange(&stream(OracleRole::ExchangeSchedule)?),
        other => Err(ConstructionError::Unknown(other.to_string())),
    }
}

/// Result of pushing an oracle through the pair-cell round trip.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCellRun {
    pub space: String,
    pub decoded: String,
}

pub fn transduce_pair_cells(bits: &str) -> Result<PairCellRun, GridError> {
    let oracle = OracleStream::new(bits, OracleRole::CellChoice)
        .expect("caller passes a nonempty binary word");
    let config = pair_cell_round_trip(&oracle).expect("role matches");
    let run = run_grid(&config, &Inputs::new(), pair_cell_horizon(bits.len()))?;
    Ok(PairCellRun {
        space: run.space.contents(),
        decoded: run.outputs_of("D").expect("decoder member")[0].clone(),
    })
}

/// Runs a construction and returns its space contents.
pub fn space_word(config: &GridConfig, horizon: Tick) -> Result<String, GridError> {
    run_grid(config, &Inputs::new(), horizon).map(|r: GridRun| r.space.contents())
}
