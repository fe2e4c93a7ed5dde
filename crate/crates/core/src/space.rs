//! The communication space: a one-sided tape of cells shared by all
//! members of a grid, with a complete write log.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::machine::{SpaceView, Symbol, BLANK};
use crate::Tick;

/// How same-tick writes of different symbols to one cell are settled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConflictPolicy {
    /// Surface the conflict; a grid run without a controller stops.
    Reject,
    /// Later writers in declaration order overwrite earlier ones.
    PriorityOrder,
    /// The controller picks the winning symbol.
    ControllerArbitrated,
}

impl ConflictPolicy {
    pub fn name(self) -> &'static str {
        match self {
            ConflictPolicy::Reject => "reject",
            ConflictPolicy::PriorityOrder => "priority",
            ConflictPolicy::ControllerArbitrated => "arbitrated",
        }
    }
}

impl FromStr for ConflictPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reject" => Ok(ConflictPolicy::Reject),
            "priority" => Ok(ConflictPolicy::PriorityOrder),
            "arbitrated" => Ok(ConflictPolicy::ControllerArbitrated),
            other => Err(format!("unknown conflict policy `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WriteEvent {
    pub tick: Tick,
    pub writer: String,
    pub cell: usize,
    pub symbol: Symbol,
}

impl fmt::Display for WriteEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.tick, self.writer, self.cell, self.symbol
        )
    }
}

impl FromStr for WriteEvent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let [tick, writer, cell, symbol] = parts.as_slice() else {
            return Err(format!("expected `tick writer cell symbol`, got `{s}`"));
        };
        let mut chars = symbol.chars();
        let symbol = match (chars.next(), chars.next()) {
            (Some(c), None) => Symbol(c),
            _ => return Err(format!("bad symbol `{symbol}`")),
        };
        Ok(WriteEvent {
            tick: tick.parse().map_err(|_| format!("bad tick `{tick}`"))?,
            writer: writer.to_string(),
            cell: cell.parse().map_err(|_| format!("bad cell `{cell}`"))?,
            symbol,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("conflict at cell {}: {} vs {}", .existing.cell, .existing, .incoming)]
    Conflict {
        existing: WriteEvent,
        incoming: WriteEvent,
    },
    #[error("blank may not be written (cell {0})")]
    BlankWrite(usize),
    #[error("write at tick {incoming} after tick {last}")]
    TickRegression { last: Tick, incoming: Tick },
}

#[derive(Debug, Clone)]
pub struct CommSpace {
    cells: Vec<Symbol>,
    log: Vec<WriteEvent>,
    policy: ConflictPolicy,
    /// Writes of the latest tick, by cell, as indices into `log`.
    tick_writes: HashMap<usize, usize>,
    first_free: usize,
}

impl CommSpace {
    pub fn new(policy: ConflictPolicy) -> Self {
        Self {
            cells: Vec::new(),
            log: Vec::new(),
            policy,
            tick_writes: HashMap::new(),
            first_free: 0,
        }
    }

    /// Rebuilds a space by replaying a write log from blank cells.
    pub fn from_log<'a>(
        policy: ConflictPolicy,
        log: impl IntoIterator<Item = &'a WriteEvent>,
    ) -> Result<Self, SpaceError> {
        let mut space = Self::new(policy);
        for event in log {
            space.write(event.clone())?;
        }
        Ok(space)
    }

    pub fn policy(&self) -> ConflictPolicy {
        self.policy
    }

    pub fn read(&self, cell: usize) -> Symbol {
        self.cells.get(cell).copied().unwrap_or(BLANK)
    }

    /// Records and applies one write. Writes must arrive in tick order.
    ///
    /// A write that disagrees with an earlier write to the same cell in the
    /// same tick is a conflict. Under `PriorityOrder` the newer write wins;
    /// otherwise the write is refused and nothing changes.
    pub fn write(&mut self, event: WriteEvent) -> Result<(), SpaceError> {
        if event.symbol.is_blank() {
            return Err(SpaceError::BlankWrite(event.cell));
        }
        match self.log.last() {
            Some(last) if event.tick < last.tick => {
                return Err(SpaceError::TickRegression {
                    last: last.tick,
                    incoming: event.tick,
                })
            }
            Some(last) if event.tick > last.tick => self.tick_writes.clear(),
            _ => {}
        }
        if let Some(&idx) = self.tick_writes.get(&event.cell) {
            let existing = &self.log[idx];
            if existing.symbol != event.symbol && self.policy != ConflictPolicy::PriorityOrder {
                return Err(SpaceError::Conflict {
                    existing: existing.clone(),
                    incoming: event,
                });
            }
        }
        if event.cell >= self.cells.len() {
            self.cells.resize(event.cell + 1, BLANK);
        }
        self.cells[event.cell] = event.symbol;
        while self.read(self.first_free) != BLANK {
            self.first_free += 1;
        }
        self.tick_writes.insert(event.cell, self.log.len());
        self.log.push(event);
        Ok(())
    }

    /// The leftmost blank cell.
    pub fn first_free(&self) -> usize {
        self.first_free
    }

    pub fn log(&self) -> &[WriteEvent] {
        &self.log
    }

    /// Number of cells up to and including the rightmost written one.
    pub fn extent(&self) -> usize {
        self.cells.len()
    }

    /// Cells `0..=upto_cell`, blanks shown as `_`.
    pub fn snapshot(&self, upto_cell: usize) -> String {
        (0..=upto_cell).map(|i| self.read(i).0).collect()
    }

    /// All cells up to the rightmost written one.
    pub fn contents(&self) -> String {
        self.cells.iter().map(|s| s.0).collect()
    }

    /// The write log, one `tick writer cell symbol` line per event.
    pub fn log_text(&self) -> String {
        self.log.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn parse_log(text: &str) -> Result<Vec<WriteEvent>, String> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| l.parse().map_err(|e| format!("line {}: {e}", i + 1)))
            .collect()
    }

    /// Cell-by-cell equality, ignoring logs and policy.
    pub fn same_cells(&self, other: &CommSpace) -> bool {
        self.contents() == other.contents()
    }
}

impl SpaceView for CommSpace {
    fn read(&self, cell: usize) -> Symbol {
        CommSpace::read(self, cell)
    }
}
