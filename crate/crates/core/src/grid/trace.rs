//! Line-per-event run traces.
//!
//! ```text
//! write TICK ID CELL SYM        a committed space write
//! ctl TICK STATE                the global controller moved
//! dir TICK ID PERM              a directive took effect
//! deny TICK ID                  a directive kept a mover from moving
//! block TICK ID                 the exchange schedule kept a mover from moving
//! move TICK ID CLOCK STATE      a member moved; CLOCK counts its moves
//! emit TICK ID TAPE SYM         a member appended to an output tape
//! halt TICK ID | stuck TICK ID  a member stopped
//! suppress TICK ID SYM          a write without permission was dropped
//! conflict TICK CELL ID=SYM ... -> SYM
//! status ID running|halted|stuck
//! final CONTENTS
//! ```

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use super::directive::{parse_directive, Permission};
use crate::machine::Symbol;
use crate::space::{CommSpace, ConflictPolicy, SpaceError, WriteEvent};
use crate::Tick;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MemberStatus {
    Running,
    Halted,
    Stuck,
}

impl MemberStatus {
    pub fn name(self) -> &'static str {
        match self {
            MemberStatus::Running => "running",
            MemberStatus::Halted => "halted",
            MemberStatus::Stuck => "stuck",
        }
    }

    pub fn is_terminal(self) -> bool {
        self != MemberStatus::Running
    }
}

impl FromStr for MemberStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "running" => Ok(MemberStatus::Running),
            "halted" => Ok(MemberStatus::Halted),
            "stuck" => Ok(MemberStatus::Stuck),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    Write {
        tick: Tick,
        writer: Arc<str>,
        cell: usize,
        symbol: Symbol,
    },
    Control {
        tick: Tick,
        state: Arc<str>,
    },
    Directive {
        tick: Tick,
        id: Arc<str>,
        permission: Permission,
    },
    Deny {
        tick: Tick,
        id: Arc<str>,
    },
    Block {
        tick: Tick,
        id: Arc<str>,
    },
    Move {
        tick: Tick,
        id: Arc<str>,
        clock: u64,
        state: Arc<str>,
    },
    Emit {
        tick: Tick,
        id: Arc<str>,
        tape: usize,
        symbol: Symbol,
    },
    Halt {
        tick: Tick,
        id: Arc<str>,
    },
    Stuck {
        tick: Tick,
        id: Arc<str>,
    },
    Suppress {
        tick: Tick,
        id: Arc<str>,
        symbol: Symbol,
    },
    Conflict {
        tick: Tick,
        cell: usize,
        contenders: Vec<(Arc<str>, Symbol)>,
        winner: Symbol,
    },
    Status {
        id: Arc<str>,
        status: MemberStatus,
    },
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Write {
                tick,
                writer,
                cell,
                symbol,
            } => write!(f, "write {tick} {writer} {cell} {symbol}"),
            Event::Control { tick, state } => write!(f, "ctl {tick} {state}"),
            Event::Directive {
                tick,
                id,
                permission,
            } => write!(f, "dir {tick} {id} {permission}"),
            Event::Deny { tick, id } => write!(f, "deny {tick} {id}"),
            Event::Block { tick, id } => write!(f, "block {tick} {id}"),
            Event::Move {
                tick,
                id,
                clock,
                state,
            } => write!(f, "move {tick} {id} {clock} {state}"),
            Event::Emit {
                tick,
                id,
                tape,
                symbol,
            } => write!(f, "emit {tick} {id} {tape} {symbol}"),
            Event::Halt { tick, id } => write!(f, "halt {tick} {id}"),
            Event::Stuck { tick, id } => write!(f, "stuck {tick} {id}"),
            Event::Suppress { tick, id, symbol } => write!(f, "suppress {tick} {id} {symbol}"),
            Event::Conflict {
                tick,
                cell,
                contenders,
                winner,
            } => {
                write!(f, "conflict {tick} {cell}")?;
                for (id, s) in contenders {
                    write!(f, " {id}={s}")?;
                }
                write!(f, " -> {winner}")
            }
            Event::Status { id, status } => write!(f, "status {id} {}", status.name()),
        }
    }
}

fn symbol(token: &str) -> Result<Symbol, String> {
    let mut chars = token.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(Symbol(c)),
        _ => Err(format!("bad symbol `{token}`")),
    }
}

fn number<T: FromStr>(token: &str) -> Result<T, String> {
    token.parse().map_err(|_| format!("bad number `{token}`"))
}

impl FromStr for Event {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let t: Vec<&str> = line.split_whitespace().collect();
        let id = |s: &str| Arc::<str>::from(s);
        let event = match t.as_slice() {
            ["write", tick, w, cell, s] => Event::Write {
                tick: number(tick)?,
                writer: id(w),
                cell: number(cell)?,
                symbol: symbol(s)?,
            },
            ["ctl", tick, state] => Event::Control {
                tick: number(tick)?,
                state: id(state),
            },
            ["dir", tick, who, perm] => Event::Directive {
                tick: number(tick)?,
                id: id(who),
                // The member digit is irrelevant here; reuse the directive parser.
                permission: parse_directive(&format!("0{perm}"), 1)
                    .map_err(|e| e.to_string())?
                    .permission,
            },
            ["deny", tick, who] => Event::Deny {
                tick: number(tick)?,
                id: id(who),
            },
            ["block", tick, who] => Event::Block {
                tick: number(tick)?,
                id: id(who),
            },
            ["move", tick, who, clock, state] => Event::Move {
                tick: number(tick)?,
                id: id(who),
                clock: number(clock)?,
                state: id(state),
            },
            ["emit", tick, who, tape, s] => Event::Emit {
                tick: number(tick)?,
                id: id(who),
                tape: number(tape)?,
                symbol: symbol(s)?,
            },
            ["halt", tick, who] => Event::Halt {
                tick: number(tick)?,
                id: id(who),
            },
            ["stuck", tick, who] => Event::Stuck {
                tick: number(tick)?,
                id: id(who),
            },
            ["suppress", tick, who, s] => Event::Suppress {
                tick: number(tick)?,
                id: id(who),
                symbol: symbol(s)?,
            },
            ["conflict", tick, cell, rest @ .., "->", winner] => Event::Conflict {
                tick: number(tick)?,
                cell: number(cell)?,
                contenders: rest
                    .iter()
                    .map(|c| {
                        // The symbol is the last character and may itself be `=`.
                        let bad = || format!("bad contender `{c}`");
                        let s = c.chars().last().ok_or_else(bad)?;
                        let who = c[..c.len() - s.len_utf8()]
                            .strip_suffix('=')
                            .filter(|w| !w.is_empty())
                            .ok_or_else(bad)?;
                        Ok((id(who), Symbol(s)))
                    })
                    .collect::<Result<_, String>>()?,
                winner: symbol(winner)?,
            },
            ["status", who, status] => Event::Status {
                id: id(who),
                status: status.parse()?,
            },
            _ => return Err(format!("unrecognized trace line `{line}`")),
        };
        Ok(event)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<Event>,
    /// Space contents at the end of the run, blanks as `_`.
    pub final_space: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceParseError {
    #[error("trace line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("trace has no `final` line")]
    MissingFinal,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("replay diverged: {0}")]
    Write(#[from] SpaceError),
    #[error("replay produced `{replayed}`, trace recorded `{recorded}`")]
    FinalMismatch { replayed: String, recorded: String },
}

impl Trace {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        if self.final_space.is_empty() {
            out.push_str("final\n");
        } else {
            out.push_str("final ");
            out.push_str(&self.final_space);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, TraceParseError> {
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "final" || line.starts_with("final ") {
                return Ok(Trace {
                    events,
                    final_space: line["final".len()..].trim().to_string(),
                });
            }
            events.push(line.parse().map_err(|message| TraceParseError::Line {
                line: i + 1,
                message,
            })?);
        }
        Err(TraceParseError::MissingFinal)
    }

    /// Committed writes, in commit order.
    pub fn writes(&self) -> impl Iterator<Item = WriteEvent> + '_ {
        self.events.iter().filter_map(|e| match e {
            Event::Write {
                tick,
                writer,
                cell,
                symbol,
            } => Some(WriteEvent {
                tick: *tick,
                writer: writer.to_string(),
                cell: *cell,
                symbol: *symbol,
            }),
            _ => None,
        })
    }
}

/// Rebuilds the final space from a trace's writes. Conflicts were settled
/// before commit, so any conflict during replay means the trace is not
/// what a run produced.
pub fn replay(trace: &Trace) -> Result<CommSpace, ReplayError> {
    let mut space = CommSpace::new(ConflictPolicy::Reject);
    for w in trace.writes() {
        space.write(w)?;
    }
    if space.contents() != trace.final_space {
        return Err(ReplayError::FinalMismatch {
            replayed: space.contents(),
            recorded: trace.final_space.clone(),
        });
    }
    Ok(space)
}

/// The first line at which two trace texts differ, 1-based, with both
/// sides (`None` past the end of a text).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceDiff {
    pub line: usize,
    pub left: Option<String>,
    pub right: Option<String>,
}

pub fn first_divergence(left: &str, right: &str) -> Option<TraceDiff> {
    let mut a = left.lines();
    let mut b = right.lines();
    let mut line = 1;
    loop {
        match (a.next(), b.next()) {
            (None, None) => return None,
            (x, y) if x == y => line += 1,
            (x, y) => {
                return Some(TraceDiff {
                    line,
                    left: x.map(String::from),
                    right: y.map(String::from),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trace {
        let a: Arc<str> = Arc::from("A");
        let b: Arc<str> = Arc::from("B");
        Trace {
            events: vec![
                Event::Write {
                    tick: 0,
                    writer: Arc::from("@init"),
                    cell: 0,
                    symbol: Symbol('x'),
                },
                Event::Control {
                    tick: 1,
                    state: Arc::from("c0"),
                },
                Event::Directive {
                    tick: 1,
                    id: a.clone(),
                    permission: Permission {
                        read: true,
                        write: false,
                        range: Some((1, 4)),
                    },
                },
                Event::Move {
                    tick: 1,
                    id: a.clone(),
                    clock: 1,
                    state: Arc::from("q"),
                },
                Event::Emit {
                    tick: 1,
                    id: a.clone(),
                    tape: 0,
                    symbol: Symbol('1'),
                },
                Event::Block {
                    tick: 1,
                    id: b.clone(),
                },
                Event::Deny {
                    tick: 2,
                    id: b.clone(),
                },
                Event::Suppress {
                    tick: 2,
                    id: a.clone(),
                    symbol: Symbol('0'),
                },
                Event::Conflict {
                    tick: 3,
                    cell: 1,
                    contenders: vec![(a.clone(), Symbol('0')), (b.clone(), Symbol('1'))],
                    winner: Symbol('1'),
                },
                Event::Write {
                    tick: 3,
                    writer: b.clone(),
                    cell: 1,
                    symbol: Symbol('1'),
                },
                Event::Halt {
                    tick: 3,
                    id: a.clone(),
                },
                Event::Stuck {
                    tick: 3,
                    id: b.clone(),
                },
                Event::Status {
                    id: a,
                    status: MemberStatus::Halted,
                },
                Event::Status {
                    id: b,
                    status: MemberStatus::Stuck,
                },
            ],
            final_space: "x1".into(),
        }
    }

    #[test]
    fn text_round_trip() {
        let t = sample();
        let text = t.to_text();
        assert!(text.ends_with("final x1\n"));
        assert!(text.contains("conflict 3 1 A=0 B=1 -> 1\n"));
        assert_eq!(Trace::parse(&text).unwrap(), t);
    }

    #[test]
    fn replay_rebuilds_space() {
        assert_eq!(replay(&sample()).unwrap().contents(), "x1");
        let empty = Trace::default();
        assert_eq!(empty.to_text(), "final\n");
        assert_eq!(
            replay(&Trace::parse("final\n").unwrap())
                .unwrap()
                .contents(),
            ""
        );
    }

    #[test]
    fn replay_detects_tampering() {
        let mut t = sample();
        t.final_space = "x0".into();
        assert!(matches!(replay(&t), Err(ReplayError::FinalMismatch { .. })));
        let mut t = sample();
        t.events.push(Event::Write {
            tick: 3,
            writer: Arc::from("A"),
            cell: 1,
            symbol: Symbol('0'),
        });
        assert!(matches!(replay(&t), Err(ReplayError::Write(_))));
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = Trace::parse("write 0 A 0 1\nbogus\nfinal\n").unwrap_err();
        assert_eq!(
            err,
            TraceParseError::Line {
                line: 2,
                message: "unrecognized trace line `bogus`".into()
            }
        );
        assert_eq!(Trace::parse("").unwrap_err(), TraceParseError::MissingFinal);
    }

    #[test]
    fn divergence_reporting() {
        assert_eq!(first_divergence("a\nb\n", "a\nb\n"), None);
        assert_eq!(
            first_divergence("a\nb\n", "a\nc\n"),
            Some(TraceDiff {
                line: 2,
                left: Some("b".into()),
                right: Some("c".into())
            })
        );
        assert_eq!(first_divergence("a\n", "a\nb\n").unwrap().left, None);
    }
}
