use std::collections::HashSet;
use std::fmt;

/// A single tape symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(pub char);

/// The reserved blank symbol. It is never emitted and never written to the
/// communication space.
pub const BLANK: Symbol = Symbol('_');

/// Characters with a fixed meaning in the text formats.
pub(crate) const RESERVED: &[char] = &['*', '-', '+', '#'];

pub(crate) fn is_reserved(c: char) -> bool {
    RESERVED.contains(&c) || c.is_whitespace()
}

impl Symbol {
    pub fn is_blank(self) -> bool {
        self == BLANK
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Head motion on a one-sided tape. `Left` at cell 0 leaves the head at 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    Left,
    Right,
    Stay,
}

impl Move {
    pub(crate) fn apply(self, head: usize) -> usize {
        match self {
            Move::Left => head.saturating_sub(1),
            Move::Right => head + 1,
            Move::Stay => head,
        }
    }

    pub(crate) fn as_char(self) -> char {
        match self {
            Move::Left => 'L',
            Move::Right => 'R',
            Move::Stay => 'S',
        }
    }

    pub(crate) fn from_char(c: char) -> Option<Self> {
        match c {
            'L' => Some(Move::Left),
            'R' => Some(Move::Right),
            'S' => Some(Move::Stay),
            _ => None,
        }
    }
}

/// What a rule expects to see under one head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pattern {
    Any,
    Is(Symbol),
}

impl Pattern {
    pub fn matches(self, symbol: Symbol) -> bool {
        match self {
            Pattern::Any => true,
            Pattern::Is(s) => s == symbol,
        }
    }

    fn overlaps(self, other: Pattern) -> bool {
        match (self, other) {
            (Pattern::Is(a), Pattern::Is(b)) => a == b,
            _ => true,
        }
    }
}

/// Effect of a rule on the communication space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceOp {
    Keep,
    /// Write into the cell under the machine's space head.
    Head(Symbol),
    /// Write into the leftmost blank cell, resolved when the tick commits.
    Append(Symbol),
}

impl SpaceOp {
    pub fn symbol(self) -> Option<Symbol> {
        match self {
            SpaceOp::Keep => None,
            SpaceOp::Head(s) | SpaceOp::Append(s) => Some(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Emit {
    pub symbol: Symbol,
    /// Index into the output tapes, 0-based.
    pub tape: usize,
}

/// The tapes a machine owns. The input and working tapes always exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct TapeRoster {
    pub outputs: usize,
    /// Whether the machine has a head on the shared communication space.
    pub space: bool,
}

impl TapeRoster {
    /// Number of heads: input, work, and the space head when present.
    pub fn heads(&self) -> usize {
        2 + usize::from(self.space)
    }
}

/// One transition. `reads` and `moves` are ordered input, work, space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub from: String,
    pub reads: Vec<Pattern>,
    pub to: String,
    pub work: Option<Symbol>,
    pub space: SpaceOp,
    pub moves: Vec<Move>,
    pub emit: Option<Emit>,
}

/// A deterministic machine with one input tape, one working tape, `k`
/// output tapes and optional access to the communication space.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MachineSpec {
    pub alphabet: Vec<Symbol>,
    pub states: Vec<String>,
    pub output_states: Vec<String>,
    pub final_states: Vec<String>,
    pub start: String,
    pub tapes: TapeRoster,
    pub rules: Vec<Rule>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DuplicateSymbol(Symbol),
    ReservedSymbol(Symbol),
    BlankMissing,
    DuplicateState(String),
    StartStateUnknown(String),
    OutputStateUnknown(String),
    FinalStateUnknown(String),
    Arity {
        rule: usize,
        field: &'static str,
        expected: usize,
        found: usize,
    },
    UnknownState {
        rule: usize,
        state: String,
    },
    UnknownSymbol {
        rule: usize,
        symbol: Symbol,
    },
    Nondeterminism {
        state: String,
        reads: String,
        first: usize,
        second: usize,
    },
    EmitOutsideOutputState {
        rule: usize,
    },
    EmitBlank {
        rule: usize,
    },
    EmitToMissingTape {
        rule: usize,
        tape: usize,
    },
    SpaceWithoutTape {
        rule: usize,
    },
    BlankToSpace {
        rule: usize,
    },
    RuleFromFinalState {
        rule: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateSymbol(s) => write!(f, "symbol {s} listed twice"),
            ReservedSymbol(s) => write!(f, "symbol {s} is reserved"),
            BlankMissing => write!(f, "blank symbol _ missing from alphabet"),
            DuplicateState(q) => write!(f, "state {q} listed twice"),
            StartStateUnknown(q) => write!(f, "start state {q} not in states"),
            OutputStateUnknown(q) => write!(f, "output state {q} not in states"),
            FinalStateUnknown(q) => write!(f, "final state {q} not in states"),
            Arity {
                rule,
                field,
                expected,
                found,
            } => write!(
                f,
                "rule {rule}: {field} has {found} entries, expected {expected}"
            ),
            UnknownState { rule, state } => write!(f, "rule {rule}: unknown state {state}"),
            UnknownSymbol { rule, symbol } => write!(f, "rule {rule}: unknown symbol {symbol}"),
            Nondeterminism {
                state,
                reads,
                first,
                second,
            } => write!(
                f,
                "nondeterminism at ({state},\"{reads}\"): rules {first} and {second} overlap"
            ),
            EmitOutsideOutputState { rule } => {
                write!(f, "rule {rule}: emits but does not enter an output state")
            }
            EmitBlank { rule } => write!(f, "rule {rule}: emits the blank symbol"),
            EmitToMissingTape { rule, tape } => {
                write!(f, "rule {rule}: emits to missing output tape {tape}")
            }
            SpaceWithoutTape { rule } => {
                write!(f, "rule {rule}: writes the space without a space tape")
            }
            BlankToSpace { rule } => write!(f, "rule {rule}: writes blank to the space"),
            RuleFromFinalState { rule } => write!(f, "rule {rule}: leaves a final state"),
        }
    }
}

/// Every invariant violation found in a spec. Empty iff the spec is
/// well-formed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport(pub Vec<Violation>);

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.0
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

fn pattern_text(reads: &[Pattern]) -> String {
    reads
        .iter()
        .map(|p| match p {
            Pattern::Any => '*',
            Pattern::Is(s) => s.0,
        })
        .collect()
}

pub fn validate(spec: &MachineSpec) -> ValidationReport {
    let mut out = Vec::new();

    let mut symbols = HashSet::new();
    for &s in &spec.alphabet {
        if !symbols.insert(s) {
            out.push(Violation::DuplicateSymbol(s));
        }
        if is_reserved(s.0) {
            out.push(Violation::ReservedSymbol(s));
        }
    }
    if !symbols.contains(&BLANK) {
        out.push(Violation::BlankMissing);
    }

    let mut states = HashSet::new();
    for q in &spec.states {
        if !states.insert(q.as_str()) {
            out.push(Violation::DuplicateState(q.clone()));
        }
    }
    if !states.contains(spec.start.as_str()) {
        out.push(Violation::StartStateUnknown(spec.start.clone()));
    }
    for q in &spec.output_states {
        if !states.contains(q.as_str()) {
            out.push(Violation::OutputStateUnknown(q.clone()));
        }
    }
    for q in &spec.final_states {
        if !states.contains(q.as_str()) {
            out.push(Violation::FinalStateUnknown(q.clone()));
        }
    }

    let heads = spec.tapes.heads();
    for (i, rule) in spec.rules.iter().enumerate() {
        for (field, found) in [("reads", rule.reads.len()), ("moves", rule.moves.len())] {
            if found != heads {
                out.push(Violation::Arity {
                    rule: i,
                    field,
                    expected: heads,
                    found,
                });
            }
        }
        for q in [&rule.from, &rule.to] {
            if !states.contains(q.as_str()) {
                out.push(Violation::UnknownState {
                    rule: i,
                    state: q.clone(),
                });
            }
        }
        let mentioned = rule
            .reads
            .iter()
            .filter_map(|p| match p {
                Pattern::Is(s) => Some(*s),
                Pattern::Any => None,
            })
            .chain(rule.work)
            .chain(rule.space.symbol())
            .chain(rule.emit.map(|e| e.symbol));
        let mut reported = HashSet::new();
        for s in mentioned {
            if !symbols.contains(&s) && reported.insert(s) {
                out.push(Violation::UnknownSymbol { rule: i, symbol: s });
            }
        }
        if let Some(emit) = rule.emit {
            if !spec.output_states.contains(&rule.to) {
                out.push(Violation::EmitOutsideOutputState { rule: i });
            }
            if emit.symbol.is_blank() {
                out.push(Violation::EmitBlank { rule: i });
            }
            if emit.tape >= spec.tapes.outputs {
                out.push(Violation::EmitToMissingTape {
                    rule: i,
                    tape: emit.tape,
                });
            }
        }
        if rule.space != SpaceOp::Keep && !spec.tapes.space {
            out.push(Violation::SpaceWithoutTape { rule: i });
        }
        if rule.space.symbol().is_some_and(Symbol::is_blank) {
            out.push(Violation::BlankToSpace { rule: i });
        }
        if spec.final_states.contains(&rule.from) {
            out.push(Violation::RuleFromFinalState { rule: i });
        }
    }

    // Two rules from one state clash when some read tuple matches both.
    for (i, a) in spec.rules.iter().enumerate() {
        for (j, b) in spec.rules.iter().enumerate().skip(i + 1) {
            if a.from == b.from
                && a.reads.len() == b.reads.len()
                && a.reads.iter().zip(&b.reads).all(|(x, y)| x.overlaps(*y))
            {
                out.push(Violation::Nondeterminism {
                    state: a.from.clone(),
                    reads: pattern_text(&a.reads),
                    first: i,
                    second: j,
                });
            }
        }
    }

    ValidationReport(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(c: char) -> Symbol {
        Symbol(c)
    }

    fn base() -> MachineSpec {
        MachineSpec {
            alphabet: vec![BLANK, sym('0'), sym('1')],
            states: vec!["q0".into(), "qf".into()],
            output_states: vec![],
            final_states: vec!["qf".into()],
            start: "q0".into(),
            tapes: TapeRoster {
                outputs: 1,
                space: false,
            },
            rules: vec![],
        }
    }

    fn rule(from: &str, reads: &[Pattern], to: &str) -> Rule {
        Rule {
            from: from.into(),
            reads: reads.to_vec(),
            to: to.into(),
            work: None,
            space: SpaceOp::Keep,
            moves: vec![Move::Stay; reads.len()],
            emit: None,
        }
    }

    #[test]
    fn duplicate_key_is_nondeterministic() {
        let mut spec = base();
        let one = [Pattern::Is(sym('1')), Pattern::Any];
        spec.rules.push(rule("q0", &one, "qf"));
        spec.rules.push(rule("q0", &one, "q0"));
        let report = validate(&spec);
        assert_eq!(report.violations().len(), 1);
        assert!(matches!(
            &report.violations()[0],
            Violation::Nondeterminism { state, reads, .. } if state == "q0" && reads == "1*"
        ));
    }

    #[test]
    fn wildcard_overlap_is_nondeterministic() {
        let mut spec = base();
        spec.rules
            .push(rule("q0", &[Pattern::Any, Pattern::Is(sym('0'))], "qf"));
        spec.rules
            .push(rule("q0", &[Pattern::Is(sym('1')), Pattern::Any], "qf"));
        assert!(!validate(&spec).is_empty());

        let mut disjoint = base();
        disjoint
            .rules
            .push(rule("q0", &[Pattern::Any, Pattern::Is(sym('0'))], "qf"));
        disjoint
            .rules
            .push(rule("q0", &[Pattern::Any, Pattern::Is(sym('1'))], "qf"));
        assert!(validate(&disjoint).is_empty());
    }

    #[test]
    fn start_state_must_be_declared() {
        let mut spec = base();
        spec.start = "nowhere".into();
        assert_eq!(
            validate(&spec).0,
            vec![Violation::StartStateUnknown("nowhere".into())]
        );
    }

    #[test]
    fn emission_rules() {
        let mut spec = base();
        let mut r = rule("q0", &[Pattern::Any, Pattern::Any], "q0");
        r.emit = Some(Emit {
            symbol: BLANK,
            tape: 3,
        });
        spec.rules.push(r);
        let v = validate(&spec).0;
        assert!(v.contains(&Violation::EmitOutsideOutputState { rule: 0 }));
        assert!(v.contains(&Violation::EmitBlank { rule: 0 }));
        assert!(v.contains(&Violation::EmitToMissingTape { rule: 0, tape: 3 }));
    }

    #[test]
    fn structural_checks() {
        let mut spec = base();
        spec.alphabet = vec![sym('0'), sym('0'), sym('*')];
        let mut r = rule("qf", &[Pattern::Is(sym('7'))], "q9");
        r.space = SpaceOp::Append(BLANK);
        spec.rules.push(r);
        let v = validate(&spec).0;
        for expected in [
            Violation::BlankMissing,
            Violation::DuplicateSymbol(sym('0')),
            Violation::ReservedSymbol(sym('*')),
            Violation::UnknownState {
                rule: 0,
                state: "q9".into(),
            },
            Violation::UnknownSymbol {
                rule: 0,
                symbol: sym('7'),
            },
            Violation::SpaceWithoutTape { rule: 0 },
            Violation::BlankToSpace { rule: 0 },
            Violation::RuleFromFinalState { rule: 0 },
        ] {
            assert!(v.contains(&expected), "missing {expected:?} in {v:?}");
        }
        assert!(v.iter().any(|x| matches!(x, Violation::Arity { .. })));
    }
}
