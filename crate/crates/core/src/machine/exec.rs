use std::collections::HashMap;

use thiserror::Error;

use super::spec::{
    validate, Emit, MachineSpec, Move, Pattern, SpaceOp, Symbol, ValidationReport, BLANK,
};

/// Read access to the communication space as seen by one machine.
pub trait SpaceView {
    fn read(&self, cell: usize) -> Symbol;
}

/// A space nobody writes to.
pub struct BlankSpace;

impl SpaceView for BlankSpace {
    fn read(&self, _cell: usize) -> Symbol {
        BLANK
    }
}

/// A private space for standalone runs; writes land immediately.
#[derive(Debug, Default, Clone)]
pub struct ScratchSpace {
    cells: Vec<Symbol>,
}

impl ScratchSpace {
    pub fn apply(&mut self, write: SpaceWrite) {
        let cell = match write {
            SpaceWrite::At { cell, .. } => cell,
            SpaceWrite::Append(_) => self
                .cells
                .iter()
                .position(|s| s.is_blank())
                .unwrap_or(self.cells.len()),
        };
        if cell >= self.cells.len() {
            self.cells.resize(cell + 1, BLANK);
        }
        self.cells[cell] = write.symbol();
    }
}

impl SpaceView for ScratchSpace {
    fn read(&self, cell: usize) -> Symbol {
        self.cells.get(cell).copied().unwrap_or(BLANK)
    }
}

/// A space write requested by one machine move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceWrite {
    At { cell: usize, symbol: Symbol },
    Append(Symbol),
}

impl SpaceWrite {
    pub fn symbol(self) -> Symbol {
        match self {
            SpaceWrite::At { symbol, .. } | SpaceWrite::Append(symbol) => symbol,
        }
    }
}

/// Side effects of one move that leave the machine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Effects {
    pub space_write: Option<SpaceWrite>,
    pub emitted: Option<Emit>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Moved(Effects),
    Halted,
    Stuck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Halted,
    Stuck,
    HorizonExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InputError {
    #[error("input symbol {0} is not in the alphabet")]
    UnknownSymbol(Symbol),
    #[error("input may not contain the blank symbol")]
    Blank,
}

#[derive(Debug, Clone)]
struct CompiledRule {
    reads: [Pattern; 3],
    to: usize,
    work: Option<Symbol>,
    space: SpaceOp,
    moves: [Move; 3],
    emit: Option<Emit>,
}

/// A validated machine, compiled for execution. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct Machine {
    spec: MachineSpec,
    start: usize,
    finals: Vec<bool>,
    by_state: Vec<Vec<CompiledRule>>,
}

/// Execution state of one run. Tapes are one-sided and grow on demand.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MachineConfig {
    pub state: usize,
    pub input: Vec<Symbol>,
    pub work: Vec<Symbol>,
    pub outputs: Vec<Vec<Symbol>>,
    /// Head positions: input, work, space.
    pub heads: [usize; 3],
    pub local_clock: u64,
}

fn cell(tape: &[Symbol], i: usize) -> Symbol {
    tape.get(i).copied().unwrap_or(BLANK)
}

pub(crate) fn word(symbols: &[Symbol]) -> String {
    symbols.iter().map(|s| s.0).collect()
}

impl MachineConfig {
    pub fn output_words(&self) -> Vec<String> {
        self.outputs.iter().map(|t| word(t)).collect()
    }

    pub fn space_head(&self) -> usize {
        self.heads[2]
    }
}

impl Machine {
    pub fn new(spec: MachineSpec) -> Result<Self, ValidationReport> {
        let report = validate(&spec);
        if !report.is_empty() {
            return Err(report);
        }
        let index: HashMap<&str, usize> = spec
            .states
            .iter()
            .enumerate()
            .map(|(i, q)| (q.as_str(), i))
            .collect();
        let mut by_state = vec![Vec::new(); spec.states.len()];
        for rule in &spec.rules {
            let mut reads = [Pattern::Any; 3];
            let mut moves = [Move::Stay; 3];
            reads[..rule.reads.len()].copy_from_slice(&rule.reads);
            moves[..rule.moves.len()].copy_from_slice(&rule.moves);
            by_state[index[rule.from.as_str()]].push(CompiledRule {
                reads,
                to: index[rule.to.as_str()],
                work: rule.work,
                space: rule.space,
                moves,
                emit: rule.emit,
            });
        }
        let finals = spec
            .states
            .iter()
            .map(|q| spec.final_states.contains(q))
            .collect();
        Ok(Self {
            start: index[spec.start.as_str()],
            finals,
            by_state,
            spec,
        })
    }

    pub fn spec(&self) -> &MachineSpec {
        &self.spec
    }

    pub fn state_name(&self, state: usize) -> &str {
        &self.spec.states[state]
    }

    pub fn is_final(&self, state: usize) -> bool {
        self.finals[state]
    }

    pub fn check_input(&self, input: &str) -> Result<Vec<Symbol>, InputError> {
        input
            .chars()
            .map(|c| {
                let s = Symbol(c);
                if s.is_blank() {
                    Err(InputError::Blank)
                } else if !self.spec.alphabet.contains(&s) {
                    Err(InputError::UnknownSymbol(s))
                } else {
                    Ok(s)
                }
            })
            .collect()
    }

    pub fn initial_config(&self, input: &str) -> Result<MachineConfig, InputError> {
        Ok(MachineConfig {
            state: self.start,
            input: self.check_input(input)?,
            work: Vec::new(),
            outputs: vec![Vec::new(); self.spec.tapes.outputs],
            heads: [0; 3],
            local_clock: 0,
        })
    }

    /// Applies the unique applicable rule. Space reads go through `space`;
    /// space writes are returned to the caller, never applied here.
    pub fn step(&self, config: &mut MachineConfig, space: &impl SpaceView) -> Step {
        if self.finals[config.state] {
            return Step::Halted;
        }
        let seen = [
            cell(&config.input, config.heads[0]),
            cell(&config.work, config.heads[1]),
            if self.spec.tapes.space {
                space.read(config.heads[2])
            } else {
                BLANK
            },
        ];
        let Some(rule) = self.by_state[config.state]
            .iter()
            .find(|r| r.reads.iter().zip(seen).all(|(p, s)| p.matches(s)))
        else {
            return Step::Stuck;
        };

        if let Some(s) = rule.work {
            let h = config.heads[1];
            if h >= config.work.len() {
                config.work.resize(h + 1, BLANK);
            }
            config.work[h] = s;
        }
        let space_write = match rule.space {
            SpaceOp::Keep => None,
            SpaceOp::Head(symbol) => Some(SpaceWrite::At {
                cell: config.heads[2],
                symbol,
            }),
            SpaceOp::Append(symbol) => Some(SpaceWrite::Append(symbol)),
        };
        if let Some(e) = rule.emit {
            config.outputs[e.tape].push(e.symbol);
        }
        for (head, mv) in config.heads.iter_mut().zip(rule.moves) {
            *head = mv.apply(*head);
        }
        config.state = rule.to;
        config.local_clock += 1;
        Step::Moved(Effects {
            space_write,
            emitted: rule.emit,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub config: MachineConfig,
    pub outputs: Vec<String>,
    pub outcome: Outcome,
}

/// Runs a machine alone for at most `horizon` moves. Space writes go to a
/// private scratch space.
pub fn run(machine: &Machine, input: &str, horizon: u64) -> Result<RunResult, InputError> {
    let mut config = machine.initial_config(input)?;
    let mut scratch = ScratchSpace::default();
    let mut outcome = Outcome::HorizonExhausted;
    while config.local_clock < horizon {
        match machine.step(&mut config, &scratch) {
            Step::Moved(effects) => {
                if let Some(w) = effects.space_write {
                    scratch.apply(w);
                }
            }
            Step::Halted => {
                outcome = Outcome::Halted;
                break;
            }
            Step::Stuck => {
                outcome = Outcome::Stuck;
                break;
            }
        }
    }
    if machine.is_final(config.state) {
        outcome = Outcome::Halted;
    }
    Ok(RunResult {
        outputs: config.output_words(),
        config,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::format::parse;

    fn machine(text: &str) -> Machine {
        Machine::new(parse(text).unwrap()).unwrap()
    }

    const COPIER: &str = "\
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
    fn one_rule_machine_writes_then_halts() {
        let m = machine(
            "alphabet: _ 1\nstates: q0 qf\nfinal_states: qf\nstart: q0\ntapes: input work\n\
             rule: q0 _* -> qf 1 SS\n",
        );
        let mut c = m.initial_config("").unwrap();
        assert!(matches!(m.step(&mut c, &BlankSpace), Step::Moved(_)));
        assert_eq!(c.work, vec![Symbol('1')]);
        assert_eq!(m.state_name(c.state), "qf");
        assert_eq!(c.local_clock, 1);
        let frozen = c.clone();
        assert_eq!(m.step(&mut c, &BlankSpace), Step::Halted);
        assert_eq!(c, frozen);
    }

    #[test]
    fn no_applicable_rule_is_stuck() {
        let m = machine(
            "alphabet: _ 0 1\nstates: q0 qf\nfinal_states: qf\nstart: q0\ntapes: input work\n\
             rule: q0 1* -> qf - SS\n",
        );
        let mut c = m.initial_config("0").unwrap();
        assert_eq!(m.step(&mut c, &BlankSpace), Step::Stuck);
        assert_eq!(c.local_clock, 0);
    }

    #[test]
    fn copier_copies() {
        // Hand trace on 1011: four emitting moves, then the blank rule.
        let m = machine(COPIER);
        let r = run(&m, "1011", 12).unwrap();
        assert_eq!(r.outputs, vec!["1011".to_string()]);
        assert_eq!(r.outcome, Outcome::Halted);
        assert_eq!(r.config.local_clock, 5);
        assert_eq!(r.config.input, m.check_input("1011").unwrap());
    }

    #[test]
    fn zero_horizon() {
        let r = run(&machine(COPIER), "1011", 0).unwrap();
        assert_eq!(r.outputs, vec![String::new()]);
        assert_eq!(r.outcome, Outcome::HorizonExhausted);
    }

    #[test]
    fn silent_loop_exhausts_horizon() {
        let m = machine(
            "alphabet: _\nstates: q\nstart: q\ntapes: input work output\nrule: q ** -> q - SS\n",
        );
        let r = run(&m, "", 1000).unwrap();
        assert_eq!(r.outputs, vec![String::new()]);
        assert_eq!(r.outcome, Outcome::HorizonExhausted);
        assert_eq!(r.config.local_clock, 1000);
    }

    #[test]
    fn heads_clamp_at_cell_zero() {
        let m = machine(
            "alphabet: _ 1\nstates: q f\nfinal_states: f\nstart: q\ntapes: input work\n\
             rule: q ** -> f - LL\n",
        );
        let r = run(&m, "1", 5).unwrap();
        assert_eq!(r.config.heads, [0, 0, 0]);
    }

    #[test]
    fn rejects_bad_input() {
        let m = machine(COPIER);
        assert_eq!(
            run(&m, "102", 3).unwrap_err(),
            InputError::UnknownSymbol(Symbol('2'))
        );
        assert_eq!(run(&m, "1_", 3).unwrap_err(), InputError::Blank);
    }

    #[test]
    fn standalone_space_is_private() {
        let m = machine(
            "alphabet: _ 1\nstates: w r done\noutput_states: done\nfinal_states: done\nstart: w\n\
             tapes: input work output space\n\
             rule: w *** -> r -+1 SSS\n\
             rule: r **1 -> done -- SSS emit 1 -> 0\n",
        );
        let r = run(&m, "", 10).unwrap();
        assert_eq!(r.outputs, vec!["1".to_string()]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        // A small counter that emits on every third move and halts on a
        // blank input cell after reaching the end of its input.
        const TICKER: &str = "\
alphabet: _ 0 1
states: a b c f
output_states: a
final_states: f
start: a
tapes: input work output
rule: a 0* -> b 1 RR
rule: a 1* -> b 0 SR
rule: b ** -> c - SS
rule: c 0* -> a - SL emit 0 -> 0
rule: c 1* -> a - RS emit 1 -> 0
rule: a _* -> f - SS
rule: c _* -> a - SS emit 1 -> 0
";

        proptest! {
            #[test]
            fn outputs_are_monotone_and_deterministic(input in "[01]{0,12}", h1 in 0u64..60, extra in 0u64..60) {
                let m = machine(TICKER);
                let a = run(&m, &input, h1).unwrap();
                let again = run(&m, &input, h1).unwrap();
                prop_assert_eq!(&a, &again);
                let b = run(&m, &input, h1 + extra).unwrap();
                for (x, y) in a.outputs.iter().zip(&b.outputs) {
                    prop_assert!(y.starts_with(x.as_str()));
                }
                prop_assert_eq!(word(&a.config.input), input.clone());
                if a.outcome == Outcome::Halted {
                    prop_assert_eq!(&a.config, &b.config);
                }
            }
        }
    }
}
