//! The controller's directive language and conflict encoding.
//!
//! In global mode the controller's output tape 0 is read as a stream of
//! directives, each terminated by `;`:
//!
//! ```text
//! directive := MEMBER PERM RANGE ';'
//! MEMBER    := one decimal digit, the member's position in the config
//! PERM      := 'n' (blocked) | 'r' (read) | 'w' (write) | 'b' (both)
//! RANGE     := 'a' (all cells) | LO '.' HI (inclusive, decimal)
//! ```
//!
//! A directive takes effect in the tick it completes and holds until the
//! next directive for the same member. Members without a directive have
//! full access. A blocked member does not move; reads outside its range
//! (or without read access) see blank; writes outside its range (or
//! without write access) are suppressed.
//!
//! For arbitration the controller is run afresh on an input listing the
//! contenders in member order, two symbols each: the member digit and the
//! symbol it tried to write. The first symbol on its output tape 0 wins.

use std::fmt;

use thiserror::Error;

use crate::machine::{run, Machine, SpaceView, Symbol, BLANK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Permission {
    pub read: bool,
    pub write: bool,
    /// Inclusive cell range; `None` means every cell.
    pub range: Option<(usize, usize)>,
}

impl Default for Permission {
    fn default() -> Self {
        Self {
            read: true,
            write: true,
            range: None,
        }
    }
}

impl Permission {
    pub fn blocked(&self) -> bool {
        !self.read && !self.write
    }

    fn in_range(&self, cell: usize) -> bool {
        self.range.is_none_or(|(lo, hi)| lo <= cell && cell <= hi)
    }

    pub fn can_read(&self, cell: usize) -> bool {
        self.read && self.in_range(cell)
    }

    pub fn can_write(&self, cell: usize) -> bool {
        self.write && self.in_range(cell)
    }
}

impl fmt::Display for Permission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let perm = match (self.read, self.write) {
            (false, false) => 'n',
            (true, false) => 'r',
            (false, true) => 'w',
            (true, true) => 'b',
        };
        match self.range {
            None => write!(f, "{perm}a"),
            Some((lo, hi)) => write!(f, "{perm}{lo}.{hi}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Directive {
    pub member: usize,
    pub permission: Permission,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed directive `{text}`")]
pub struct DirectiveError {
    pub text: String,
}

pub fn parse_directive(text: &str, members: usize) -> Result<Directive, DirectiveError> {
    let bad = || DirectiveError {
        text: text.to_string(),
    };
    let mut chars = text.chars();
    let member = chars
        .next()
        .and_then(|c| c.to_digit(10))
        .map(|d| d as usize)
        .filter(|&d| d < members)
        .ok_or_else(bad)?;
    let (read, write) = match chars.next() {
        Some('n') => (false, false),
        Some('r') => (true, false),
        Some('w') => (false, true),
        Some('b') => (true, true),
        _ => return Err(bad()),
    };
    let rest: String = chars.collect();
    let range = if rest == "a" {
        None
    } else {
        let (lo, hi) = rest.split_once('.').ok_or_else(bad)?;
        let lo: usize = lo.parse().map_err(|_| bad())?;
        let hi: usize = hi.parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        Some((lo, hi))
    };
    Ok(Directive {
        member,
        permission: Permission { read, write, range },
    })
}

/// Incrementally splits the controller's output into directives.
#[derive(Debug, Clone, Default)]
pub struct DirectiveDecoder {
    consumed: usize,
    pending: String,
}

impl DirectiveDecoder {
    /// Consumes whatever the controller emitted since the last call.
    pub fn feed(
        &mut self,
        tape: &[Symbol],
        members: usize,
    ) -> Result<Vec<Directive>, DirectiveError> {
        let mut out = Vec::new();
        for s in &tape[self.consumed..] {
            if s.0 == ';' {
                out.push(parse_directive(&self.pending, members)?);
                self.pending.clear();
            } else {
                self.pending.push(s.0);
            }
        }
        self.consumed = tape.len();
        Ok(out)
    }
}

/// A member's view of the space through its current permission.
pub struct Masked<'a, S: SpaceView> {
    pub space: &'a S,
    pub permission: Permission,
}

impl<S: SpaceView> SpaceView for Masked<'_, S> {
    fn read(&self, cell: usize) -> Symbol {
        if self.permission.can_read(cell) {
            self.space.read(cell)
        } else {
            BLANK
        }
    }
}

pub fn conflict_input(contenders: &[(usize, Symbol)]) -> String {
    let mut s = String::with_capacity(contenders.len() * 2);
    for (member, symbol) in contenders {
        s.push(char::from_digit(*member as u32, 10).expect("member index is one digit"));
        s.push(symbol.0);
    }
    s
}

/// Runs the controller on a conflict. `None` when it gives no usable
/// verdict: an input it cannot read, no output within budget, or a symbol
/// none of the contenders wrote.
pub fn arbitrate(
    controller: &Machine,
    contenders: &[(usize, Symbol)],
    budget: u64,
) -> Option<Symbol> {
    let result = run(controller, &conflict_input(contenders), budget).ok()?;
    let winner = result.config.outputs.first()?.first().copied()?;
    contenders
        .iter()
        .any(|(_, s)| *s == winner)
        .then_some(winner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::format::parse;

    #[test]
    fn parses_directives() {
        let d = parse_directive("1w3.7", 2).unwrap();
        assert_eq!(d.member, 1);
        assert_eq!(
            d.permission,
            Permission {
                read: false,
                write: true,
                range: Some((3, 7))
            }
        );
        assert_eq!(d.permission.to_string(), "w3.7");
        assert_eq!(
            parse_directive("0na", 1).unwrap().permission.to_string(),
            "na"
        );
        for bad in ["", "2ba", "0xa", "0b", "0b7.3", "0b1-2", "ab1.2"] {
            assert!(parse_directive(bad, 2).is_err(), "{bad}");
        }
    }

    #[test]
    fn decoder_waits_for_terminator() {
        let mut dec = DirectiveDecoder::default();
        let mut tape: Vec<Symbol> = "0b".chars().map(Symbol).collect();
        assert!(dec.feed(&tape, 2).unwrap().is_empty());
        tape.extend("a;1r0.4;".chars().map(Symbol));
        let got = dec.feed(&tape, 2).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[1].member, 1);
        assert!(dec.feed(&tape, 2).unwrap().is_empty());
    }

    #[test]
    fn permissions_mask_reads_and_writes() {
        let p = Permission {
            read: true,
            write: false,
            range: Some((2, 4)),
        };
        assert!(p.can_read(2) && p.can_read(4) && !p.can_read(5));
        assert!(!p.can_write(3));
        assert!(Permission {
            read: false,
            write: false,
            range: None
        }
        .blocked());
    }

    #[test]
    fn first_contender_arbiter() {
        let m = Machine::new(
            parse(
                "alphabet: _ 0 1 2\nstates: s t done\noutput_states: done\nfinal_states: done\n\
                 start: s\ntapes: input work output\n\
                 rule: s ** -> t - RS\n\
                 rule: t 0* -> done - SS emit 0 -> 0\n\
                 rule: t 1* -> done - SS emit 1 -> 0\n",
            )
            .unwrap(),
        )
        .unwrap();
        let contenders = [(0, Symbol('1')), (2, Symbol('0'))];
        assert_eq!(conflict_input(&contenders), "0120");
        assert_eq!(arbitrate(&m, &contenders, 10), Some(Symbol('1')));
        assert_eq!(arbitrate(&m, &contenders, 1), None);
    }
}
