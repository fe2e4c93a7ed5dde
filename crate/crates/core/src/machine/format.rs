//! Line-oriented machine descriptions.
//!
//! ```text
//! # comments run to end of line
//! alphabet: _ 0 1
//! states: copy done
//! output_states: copy
//! final_states: done
//! start: copy
//! tapes: input work output space
//! rule: copy 0*_ -> copy -+0 RSS emit 0 -> 0
//! ```
//!
//! A rule is `rule: FROM READS -> TO WRITES MOVES [emit SYM -> TAPE]`.
//!
//! * `READS` has one character per head (input, work, then space if the
//!   roster has one); `*` matches anything.
//! * `WRITES` starts with the working-tape write (`-` for none). When the
//!   machine has a space tape it continues with `-` (no write), a symbol
//!   (write under the space head) or `+` and a symbol (write into the
//!   leftmost blank cell).
//! * `MOVES` has one of `L`, `R`, `S` per head.
//! * `TAPE` is a 0-based output tape index.
//!
//! `tapes:` lists `input`, `work`, any number of `output`, and optionally
//! `space`, in that order. `output_states:` and `final_states:` may be
//! empty or omitted.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use super::spec::{Emit, MachineSpec, Move, Pattern, Rule, SpaceOp, Symbol, TapeRoster};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn single_char(token: &str, line: usize) -> Result<Symbol, ParseError> {
    let mut chars = token.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(Symbol(c)),
        _ => Err(err(line, format!("symbol `{token}` must be one character"))),
    }
}

fn parse_tapes(tokens: &[&str], line: usize) -> Result<TapeRoster, ParseError> {
    let mut rest = tokens;
    for required in ["input", "work"] {
        match rest.split_first() {
            Some((t, tail)) if *t == required => rest = tail,
            _ => return Err(err(line, "tapes must start with `input work`")),
        }
    }
    let mut roster = TapeRoster::default();
    while let Some((t, tail)) = rest.split_first() {
        match *t {
            "output" if !roster.space => roster.outputs += 1,
            "space" if !roster.space => roster.space = true,
            other => return Err(err(line, format!("unexpected tape `{other}`"))),
        }
        rest = tail;
    }
    Ok(roster)
}

fn parse_writes(token: &str, line: usize) -> Result<(Option<Symbol>, SpaceOp), ParseError> {
    let mut chars = token.chars();
    let work = match chars.next() {
        Some('-') => None,
        Some(c) => Some(Symbol(c)),
        None => return Err(err(line, "empty writes")),
    };
    let rest: Vec<char> = chars.collect();
    let space = match rest.as_slice() {
        [] | ['-'] => SpaceOp::Keep,
        ['+', c] => SpaceOp::Append(Symbol(*c)),
        [c] if *c != '+' => SpaceOp::Head(Symbol(*c)),
        _ => return Err(err(line, format!("malformed writes `{token}`"))),
    };
    Ok((work, space))
}

fn parse_rule(text: &str, line: usize) -> Result<Rule, ParseError> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let (from, reads, arrow, to, writes, moves, tail) = match tokens.as_slice() {
        [a, b, c, d, e, f, tail @ ..] => (*a, *b, *c, *d, *e, *f, tail),
        _ => return Err(err(line, "rule needs FROM READS -> TO WRITES MOVES")),
    };
    if arrow != "->" {
        return Err(err(line, "expected `->` after reads"));
    }
    let reads = reads
        .chars()
        .map(|c| match c {
            '*' => Pattern::Any,
            c => Pattern::Is(Symbol(c)),
        })
        .collect();
    let (work, space) = parse_writes(writes, line)?;
    let moves = moves
        .chars()
        .map(|c| Move::from_char(c).ok_or_else(|| err(line, format!("bad move `{c}`"))))
        .collect::<Result<_, _>>()?;
    let emit = match tail {
        [] => None,
        ["emit", sym, "->", tape] => Some(Emit {
            symbol: single_char(sym, line)?,
            tape: tape
                .parse()
                .map_err(|_| err(line, format!("bad output tape `{tape}`")))?,
        }),
        _ => return Err(err(line, "trailing tokens; expected `emit SYM -> TAPE`")),
    };
    Ok(Rule {
        from: from.to_string(),
        reads,
        to: to.to_string(),
        work,
        space,
        moves,
        emit,
    })
}

pub fn parse(text: &str) -> Result<MachineSpec, ParseError> {
    let mut spec = MachineSpec::default();
    let mut seen: Vec<&str> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once(':')
            .ok_or_else(|| err(line, format!("expected `key: value`, got `{content}`")))?;
        let key = key.trim();
        let tokens: Vec<&str> = value.split_whitespace().collect();
        if key != "rule" && seen.contains(&key) {
            return Err(err(line, format!("duplicate header `{key}`")));
        }
        match key {
            "alphabet" => {
                spec.alphabet = tokens
                    .iter()
                    .map(|t| single_char(t, line))
                    .collect::<Result<_, _>>()?
            }
            "states" => spec.states = tokens.iter().map(|s| s.to_string()).collect(),
            "output_states" => spec.output_states = tokens.iter().map(|s| s.to_string()).collect(),
            "final_states" => spec.final_states = tokens.iter().map(|s| s.to_string()).collect(),
            "start" => match tokens.as_slice() {
                [q] => spec.start = q.to_string(),
                _ => return Err(err(line, "start takes exactly one state")),
            },
            "tapes" => spec.tapes = parse_tapes(&tokens, line)?,
            "rule" => spec.rules.push(parse_rule(value, line)?),
            other => return Err(err(line, format!("unknown header `{other}`"))),
        }
        if key != "rule" {
            seen.push(key);
        }
    }
    for required in ["alphabet", "states", "start", "tapes"] {
        if !seen.contains(&required) {
            return Err(err(0, format!("missing `{required}:` header")));
        }
    }
    Ok(spec)
}

fn print_rule(out: &mut String, rule: &Rule, roster: TapeRoster) {
    let reads: String = rule
        .reads
        .iter()
        .map(|p| match p {
            Pattern::Any => '*',
            Pattern::Is(s) => s.0,
        })
        .collect();
    let mut writes = String::new();
    writes.push(rule.work.map_or('-', |s| s.0));
    match rule.space {
        SpaceOp::Keep if roster.space => writes.push('-'),
        SpaceOp::Keep => {}
        SpaceOp::Head(s) => writes.push(s.0),
        SpaceOp::Append(s) => {
            writes.push('+');
            writes.push(s.0);
        }
    }
    let moves: String = rule.moves.iter().map(|m| m.as_char()).collect();
    let _ = write!(
        out,
        "rule: {} {} -> {} {} {}",
        rule.from, reads, rule.to, writes, moves
    );
    if let Some(e) = rule.emit {
        let _ = write!(out, " emit {} -> {}", e.symbol, e.tape);
    }
    out.push('\n');
}

pub fn print(spec: &MachineSpec) -> String {
    let mut out = String::new();
    let join = |v: &[String]| v.join(" ");
    let alphabet: Vec<String> = spec.alphabet.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "alphabet: {}", alphabet.join(" "));
    let _ = writeln!(out, "states: {}", join(&spec.states));
    let _ = writeln!(out, "output_states: {}", join(&spec.output_states));
    let _ = writeln!(out, "final_states: {}", join(&spec.final_states));
    let _ = writeln!(out, "start: {}", spec.start);
    let mut tapes = String::from("input work");
    for _ in 0..spec.tapes.outputs {
        tapes.push_str(" output");
    }
    if spec.tapes.space {
        tapes.push_str(" space");
    }
    let _ = writeln!(out, "tapes: {tapes}");
    for rule in &spec.rules {
        print_rule(&mut out, rule, spec.tapes);
    }
    // Headers with empty values print with a trailing space; trim it.
    out.lines()
        .map(str::trim_end)
        .fold(String::new(), |mut acc, l| {
            acc.push_str(l);
            acc.push('\n');
            acc
        })
}

impl FromStr for MachineSpec {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl fmt::Display for MachineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::spec::BLANK;
    use proptest::prelude::*;

    const COPIER: &str = "\
# copies its input to output tape 0
alphabet: _ 0 1
states: copy done
output_states: copy
final_states: done
start: copy
tapes: input work output
rule: copy 0* -> copy - RS emit 0 -> 0
rule: copy 1* -> copy - RS emit 1 -> 0
rule: copy _* -> done - SS
";

    #[test]
    fn parses_copier() {
        let spec = parse(COPIER).unwrap();
        assert_eq!(spec.alphabet, vec![BLANK, Symbol('0'), Symbol('1')]);
        assert_eq!(
            spec.tapes,
            TapeRoster {
                outputs: 1,
                space: false
            }
        );
        assert_eq!(spec.rules.len(), 3);
        assert_eq!(
            spec.rules[1].emit,
            Some(Emit {
                symbol: Symbol('1'),
                tape: 0
            })
        );
        assert_eq!(
            print(&spec),
            COPIER.lines().skip(1).collect::<Vec<_>>().join("\n") + "\n"
        );
    }

    #[test]
    fn space_writes() {
        let (w, s) = parse_writes("-+0", 1).unwrap();
        assert_eq!((w, s), (None, SpaceOp::Append(Symbol('0'))));
        assert_eq!(
            parse_writes("1-", 1).unwrap(),
            (Some(Symbol('1')), SpaceOp::Keep)
        );
        assert_eq!(
            parse_writes("-1", 1).unwrap(),
            (None, SpaceOp::Head(Symbol('1')))
        );
        assert!(parse_writes("-+", 1).is_err());
        assert!(parse_writes("-10", 1).is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "alphabet: _ 0\nstates: a\nstart: a\ntapes: input work\nrule: a 0 -> a\n";
        assert_eq!(parse(bad).unwrap_err().line, 5);
        let missing = "alphabet: _ 0\nstates: a\n";
        assert!(parse(missing).unwrap_err().message.contains("start"));
        assert_eq!(parse("alphabet: _\nalphabet: 0\n").unwrap_err().line, 2);
        assert_eq!(parse("tapes: work input\n").unwrap_err().line, 1);
    }

    fn arb_symbol() -> impl Strategy<Value = Symbol> {
        prop::sample::select(vec!['_', '0', '1', 'a', 'x', '9']).prop_map(Symbol)
    }

    fn arb_state() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9_]{0,4}"
    }

    fn arb_rule(heads: usize, space: bool) -> impl Strategy<Value = Rule> {
        let pattern = prop_oneof![Just(Pattern::Any), arb_symbol().prop_map(Pattern::Is)];
        let mv = prop::sample::select(vec![Move::Left, Move::Right, Move::Stay]);
        let space_op = if space {
            prop_oneof![
                Just(SpaceOp::Keep),
                arb_symbol().prop_map(SpaceOp::Head),
                arb_symbol().prop_map(SpaceOp::Append)
            ]
            .boxed()
        } else {
            Just(SpaceOp::Keep).boxed()
        };
        (
            arb_state(),
            prop::collection::vec(pattern, heads),
            arb_state(),
            prop::option::of(arb_symbol()),
            space_op,
            prop::collection::vec(mv, heads),
            prop::option::of(
                (arb_symbol(), 0usize..3).prop_map(|(symbol, tape)| Emit { symbol, tape }),
            ),
        )
            .prop_map(|(from, reads, to, work, space, moves, emit)| Rule {
                from,
                reads,
                to,
                work,
                space,
                moves,
                emit,
            })
    }

    fn arb_spec() -> impl Strategy<Value = MachineSpec> {
        (0usize..3, any::<bool>()).prop_flat_map(|(outputs, space)| {
            let tapes = TapeRoster { outputs, space };
            (
                prop::collection::vec(arb_symbol(), 1..5),
                prop::collection::vec(arb_state(), 1..4),
                prop::collection::vec(arb_state(), 0..3),
                prop::collection::vec(arb_state(), 0..3),
                arb_state(),
                prop::collection::vec(arb_rule(tapes.heads(), space), 0..6),
            )
                .prop_map(
                    move |(alphabet, states, output_states, final_states, start, rules)| {
                        MachineSpec {
                            alphabet,
                            states,
                            output_states,
                            final_states,
                            start,
                            tapes,
                            rules,
                        }
                    },
                )
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(spec in arb_spec()) {
            let text = print(&spec);
            let back = parse(&text).unwrap();
            prop_assert_eq!(&back, &spec);
            prop_assert_eq!(print(&back), text);
        }
    }
}
