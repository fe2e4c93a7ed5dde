use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use super::config::{ConfigError, Grid, GridConfig, Inputs, PRELOAD_WRITER};
use super::directive::{arbitrate, DirectiveDecoder, DirectiveError, Masked, Permission};
use super::trace::{Event, MemberStatus, Trace};
use crate::machine::{MachineConfig, SpaceWrite, Step, Symbol};
use crate::space::{CommSpace, ConflictPolicy, WriteEvent};
use crate::Tick;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unresolved conflict at tick {tick}, cell {cell}: {}", describe(.contenders))]
    UnresolvedConflict {
        tick: Tick,
        cell: usize,
        contenders: Vec<(String, Symbol)>,
        /// Everything up to the conflicting tick.
        trace: Trace,
    },
    #[error("tick {tick}: {error}")]
    Directive { tick: Tick, error: DirectiveError },
}

fn describe(contenders: &[(String, Symbol)]) -> String {
    contenders
        .iter()
        .map(|(id, s)| format!("{id} wrote {s}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone)]
pub struct GridRun {
    pub trace: Trace,
    /// Output words per member, in declaration order.
    pub outputs: Vec<(String, Vec<String>)>,
    pub space: CommSpace,
    pub statuses: Vec<(String, MemberStatus)>,
}

impl GridRun {
    pub fn outputs_of(&self, id: &str) -> Option<&[String]> {
        self.outputs
            .iter()
            .find(|(m, _)| m == id)
            .map(|(_, o)| o.as_slice())
    }
}

struct MemberRun {
    config: MachineConfig,
    status: MemberStatus,
    /// Global tick of the next scheduled move, `None` once the scale runs out.
    next_tick: Option<Tick>,
    slots: u64,
    permission: Permission,
}

/// Runs a grid for `horizon` global ticks.
///
/// Each tick: the global controller moves and its new directives take
/// effect; each member scheduled to move at this tick, if admitted, takes
/// one step against the space as it stood before the tick; then the
/// tick's writes are committed, addressed writes first and appends after
/// them in declaration order. The run ends early once every member is
/// halted, stuck or out of scheduled moves.
pub fn run_grid(config: &GridConfig, inputs: &Inputs, horizon: Tick) -> Result<GridRun, GridError> {
    let grid = Grid::new(config, inputs)?;
    let mut space = CommSpace::new(ConflictPolicy::Reject);
    let mut events = Vec::new();

    for (cell, symbol) in grid.preload() {
        let w = WriteEvent {
            tick: 0,
            writer: PRELOAD_WRITER.to_string(),
            cell,
            symbol,
        };
        space
            .write(w)
            .expect("preload cells are distinct and non-blank");
        events.push(Event::Write {
            tick: 0,
            writer: Arc::from(PRELOAD_WRITER),
            cell,
            symbol,
        });
    }

    let mut members: Vec<MemberRun> = grid
        .machines
        .iter()
        .zip(&grid.inputs)
        .zip(&config.members)
        .map(|((m, input), member)| MemberRun {
            config: m
                .initial_config(input)
                .expect("inputs checked by Grid::new"),
            status: MemberStatus::Running,
            next_tick: member.scale.move_tick(1).ok(),
            slots: 0,
            permission: Permission::default(),
        })
        .collect();

    let global = grid.is_global();
    let mut controller = grid
        .controller
        .as_ref()
        .filter(|_| global)
        .map(|(_, m, _)| {
            (
                m.initial_config("").expect("empty input is always valid"),
                true,
            )
        });
    let mut decoder = DirectiveDecoder::default();

    for tick in 1..=horizon {
        let finished = members
            .iter()
            .all(|m| m.status.is_terminal() || m.next_tick.is_none());
        if finished {
            break;
        }

        if let (Some((cfg, running)), Some((_, machine, states))) =
            (&mut controller, &grid.controller)
        {
            if *running {
                match machine.step(cfg, &space) {
                    Step::Moved(_) => {
                        events.push(Event::Control {
                            tick,
                            state: states[cfg.state].clone(),
                        });
                        let directives = decoder
                            .feed(&cfg.outputs[0], members.len())
                            .map_err(|error| GridError::Directive { tick, error })?;
                        for d in directives {
                            members[d.member].permission = d.permission;
                            events.push(Event::Directive {
                                tick,
                                id: grid.ids[d.member].clone(),
                                permission: d.permission,
                            });
                        }
                    }
                    Step::Halted | Step::Stuck => *running = false,
                }
            }
        }

        let mut addressed: BTreeMap<usize, Vec<(usize, Symbol)>> = BTreeMap::new();
        let mut appends: Vec<(usize, Symbol)> = Vec::new();

        for (i, member) in members.iter_mut().enumerate() {
            if member.next_tick != Some(tick) {
                continue;
            }
            member.slots += 1;
            member.next_tick = config.members[i].scale.move_tick(member.slots + 1).ok();
            if member.status.is_terminal() {
                continue;
            }
            let id = &grid.ids[i];
            if !config.schedule.admits(tick, id) {
                events.push(Event::Block {
                    tick,
                    id: id.clone(),
                });
                continue;
            }
            if member.permission.blocked() {
                events.push(Event::Deny {
                    tick,
                    id: id.clone(),
                });
                continue;
            }
            let machine = &grid.machines[i];
            let view = Masked {
                space: &space,
                permission: member.permission,
            };
            match machine.step(&mut member.config, &view) {
                Step::Moved(effects) => {
                    events.push(Event::Move {
                        tick,
                        id: id.clone(),
                        clock: member.config.local_clock,
                        state: grid.state_names[i][member.config.state].clone(),
                    });
                    if let Some(e) = effects.emitted {
                        events.push(Event::Emit {
                            tick,
                            id: id.clone(),
                            tape: e.tape,
                            symbol: e.symbol,
                        });
                    }
                    match effects.space_write {
                        Some(SpaceWrite::At { cell, symbol }) => {
                            if member.permission.can_write(cell) {
                                addressed.entry(cell).or_default().push((i, symbol));
                            } else {
                                events.push(Event::Suppress {
                                    tick,
                                    id: id.clone(),
                                    symbol,
                                });
                            }
                        }
                        Some(SpaceWrite::Append(symbol)) => appends.push((i, symbol)),
                        None => {}
                    }
                    if machine.is_final(member.config.state) {
                        member.status = MemberStatus::Halted;
                        events.push(Event::Halt {
                            tick,
                            id: id.clone(),
                        });
                    }
                }
                Step::Halted => member.status = MemberStatus::Halted,
                Step::Stuck => {
                    member.status = MemberStatus::Stuck;
                    events.push(Event::Stuck {
                        tick,
                        id: id.clone(),
                    });
                }
            }
        }

        for (cell, writes) in addressed {
            let first = writes[0].1;
            let winner = if writes.iter().all(|(_, s)| *s == first) {
                first
            } else {
                let resolved = match grid.policy {
                    ConflictPolicy::Reject => None,
                    ConflictPolicy::PriorityOrder => writes.last().map(|(_, s)| *s),
                    ConflictPolicy::ControllerArbitrated => grid
                        .controller
                        .as_ref()
                        .and_then(|(_, m, _)| arbitrate(m, &writes, config.arbiter_budget)),
                };
                let Some(winner) = resolved else {
                    return Err(GridError::UnresolvedConflict {
                        tick,
                        cell,
                        contenders: writes
                            .iter()
                            .map(|(i, s)| (grid.ids[*i].to_string(), *s))
                            .collect(),
                        trace: Trace {
                            events,
                            final_space: space.contents(),
                        },
                    });
                };
                events.push(Event::Conflict {
                    tick,
                    cell,
                    contenders: writes
                        .iter()
                        .map(|(i, s)| (grid.ids[*i].clone(), *s))
                        .collect(),
                    winner,
                });
                winner
            };
            for (i, symbol) in writes {
                if symbol == winner {
                    commit(&mut space, &mut events, tick, &grid.ids[i], cell, symbol);
                }
            }
        }

        for (i, symbol) in appends {
            let cell = space.first_free();
            if members[i].permission.can_write(cell) {
                commit(&mut space, &mut events, tick, &grid.ids[i], cell, symbol);
            } else {
                events.push(Event::Suppress {
                    tick,
                    id: grid.ids[i].clone(),
                    symbol,
                });
            }
        }
    }

    let statuses: Vec<(String, MemberStatus)> = grid
        .ids
        .iter()
        .zip(&members)
        .map(|(id, m)| (id.to_string(), m.status))
        .collect();
    for (id, m) in grid.ids.iter().zip(&members) {
        events.push(Event::Status {
            id: id.clone(),
            status: m.status,
        });
    }
    let outputs = grid
        .ids
        .iter()
        .zip(&members)
        .map(|(id, m)| (id.to_string(), m.config.output_words()))
        .collect();
    Ok(GridRun {
        trace: Trace {
            events,
            final_space: space.contents(),
        },
        outputs,
        space,
        statuses,
    })
}

fn commit(
    space: &mut CommSpace,
    events: &mut Vec<Event>,
    tick: Tick,
    id: &Arc<str>,
    cell: usize,
    symbol: Symbol,
) {
    space
        .write(WriteEvent {
            tick,
            writer: id.to_string(),
            cell,
            symbol,
        })
        .expect("conflicts are settled before commit");
    events.push(Event::Write {
        tick,
        writer: id.clone(),
        cell,
        symbol,
    });
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::constructions::{alternating_writers, input_copier};
    use crate::grid::{replay, ControlMode, Controller, Member};
    use crate::machine::{format::parse, run, Machine, MachineSpec};
    use crate::schedule::{ExchangeSchedule, TimeScale};
    use proptest::prelude::*;

    fn steady(symbol: char) -> MachineSpec {
        parse(&format!(
            "alphabet: _ 0 1\nstates: w\nstart: w\ntapes: input work space\n\
             rule: w *** -> w -+{symbol} SSS\n"
        ))
        .unwrap()
    }

    fn once_at_head(symbol: char) -> MachineSpec {
        parse(&format!(
            "alphabet: _ 0 1\nstates: w done\nfinal_states: done\nstart: w\n\
             tapes: input work space\nrule: w *** -> done -{symbol} SSS\n"
        ))
        .unwrap()
    }

    /// Emits the given directives one symbol per move, then idles. As an
    /// arbiter it picks the first contender's symbol.
    pub(crate) fn directive_controller(directives: &[&str]) -> MachineSpec {
        let script: Vec<char> = directives
            .iter()
            .flat_map(|d| d.chars().chain([';']))
            .collect();
        let mut alphabet: Vec<char> = vec!['_', '0', '1'];
        for &c in &script {
            if !alphabet.contains(&c) {
                alphabet.push(c);
            }
        }
        let n = script.len();
        let states: Vec<String> = (0..=n).map(|i| format!("d{i}")).collect();
        let mut text = format!(
            "alphabet: {}\nstates: start {} pick done\noutput_states: {} done\n\
             final_states: done\nstart: start\ntapes: input work output\n",
            alphabet
                .iter()
                .map(char::to_string)
                .collect::<Vec<_>>()
                .join(" "),
            states.join(" "),
            states.join(" "),
        );
        text.push_str("rule: start 0* -> pick - RS\nrule: start 1* -> pick - RS\n");
        text.push_str("rule: pick 0* -> done - SS emit 0 -> 0\n");
        text.push_str("rule: pick 1* -> done - SS emit 1 -> 0\n");
        text.push_str("rule: start _* -> d0 - SS\n");
        for (i, c) in script.iter().enumerate() {
            text.push_str(&format!("rule: d{i} ** -> d{} - SS emit {c} -> 0\n", i + 1));
        }
        text.push_str(&format!("rule: d{n} ** -> d{n} - SS\n"));
        parse(&text).unwrap()
    }

    fn controlled(members: Vec<Member>, directives: &[&str], mode: ControlMode) -> GridConfig {
        let mut cfg = GridConfig::new(members);
        cfg.controller = Some(Controller {
            id: "C".into(),
            spec: directive_controller(directives),
            mode,
        });
        cfg
    }

    fn clash() -> Vec<Member> {
        vec![
            Member::new("A", once_at_head('0')),
            Member::new("B", once_at_head('1')),
        ]
    }

    #[test]
    fn horizon_zero_is_empty() {
        let r = run_grid(&alternating_writers(), &Inputs::new(), 0).unwrap();
        assert_eq!(r.space.contents(), "");
        assert!(r
            .trace
            .events
            .iter()
            .all(|e| matches!(e, Event::Status { .. })));
        assert_eq!(replay(&r.trace).unwrap().contents(), "");
    }

    #[test]
    fn synchronous_pair_and_replay() {
        let r = run_grid(&alternating_writers(), &Inputs::new(), 8).unwrap();
        assert_eq!(r.space.contents(), "10101010");
        assert_eq!(r.trace.final_space, "10101010");
        assert!(replay(&r.trace).unwrap().same_cells(&r.space));
        let again = run_grid(&alternating_writers(), &Inputs::new(), 8).unwrap();
        assert_eq!(r.trace.to_text(), again.trace.to_text());
    }

    #[test]
    fn reject_surfaces_conflict() {
        let err = run_grid(&GridConfig::new(clash()), &Inputs::new(), 5).unwrap_err();
        match err {
            GridError::UnresolvedConflict {
                tick,
                cell,
                contenders,
                ..
            } => {
                assert_eq!((tick, cell), (1, 0));
                assert_eq!(
                    contenders,
                    vec![
                        ("A".to_string(), Symbol('0')),
                        ("B".to_string(), Symbol('1'))
                    ]
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn priority_takes_last_declared() {
        let mut cfg = GridConfig::new(clash());
        cfg.policy = Some(ConflictPolicy::PriorityOrder);
        let r = run_grid(&cfg, &Inputs::new(), 5).unwrap();
        assert_eq!(r.space.contents(), "1");
        assert!(r.trace.to_text().contains("conflict 1 0 A=0 B=1 -> 1\n"));
        assert_eq!(replay(&r.trace).unwrap().contents(), "1");
    }

    #[test]
    fn controller_arbitrates() {
        let cfg = controlled(clash(), &[], ControlMode::Local);
        let r = run_grid(&cfg, &Inputs::new(), 5).unwrap();
        assert_eq!(r.space.contents(), "0");
        assert!(r.trace.to_text().contains("conflict 1 0 A=0 B=1 -> 0\n"));
        assert!(r.statuses.iter().all(|(_, s)| *s == MemberStatus::Halted));
    }

    #[test]
    fn silent_arbiter_leaves_conflict_unresolved() {
        let mut cfg = GridConfig::new(clash());
        cfg.controller = Some(Controller {
            id: "C".into(),
            spec: crate::constructions::idle_controller(),
            mode: ControlMode::Local,
        });
        assert!(matches!(
            run_grid(&cfg, &Inputs::new(), 5),
            Err(GridError::UnresolvedConflict { .. })
        ));
    }

    #[test]
    fn directives_block_and_release() {
        let members = vec![Member::new("A", steady('0')), Member::new("B", steady('1'))];
        let cfg = controlled(members, &["1na", "1ba"], ControlMode::Global);
        let r = run_grid(&cfg, &Inputs::new(), 9).unwrap();
        // The controller idles on tick 1, then emits one symbol per tick:
        // B writes on ticks 1-4, is blocked on 5-8 and writes again on 9.
        assert_eq!(r.space.contents(), "01010101000001");
        let text = r.trace.to_text();
        assert!(text.contains("dir 5 B na\n"));
        assert!(text.contains("deny 8 B\n"));
        assert!(text.contains("dir 9 B ba\n"));
        assert_eq!(replay(&r.trace).unwrap().contents(), r.space.contents());
    }

    #[test]
    fn directives_mask_writes_and_reads() {
        let members = vec![Member::new("A", steady('0'))];
        let cfg = controlled(members, &["0r0.1"], ControlMode::Global);
        let r = run_grid(&cfg, &Inputs::new(), 8).unwrap();
        // The directive takes effect at tick 7, and A loses write access.
        assert_eq!(r.space.contents(), "000000");
        let text = r.trace.to_text();
        assert!(text.contains("suppress 7 A 0\n") && text.contains("suppress 8 A 0\n"));

        let late = TimeScale::table((20..=40).collect()).unwrap();
        let decoder = Member::new("D", crate::constructions::pair_cell_decoder()).with_scale(late);
        let mut cfg = GridConfig::new(vec![decoder]);
        cfg.preload = "10".into();
        cfg.controller = Some(Controller {
            id: "C".into(),
            spec: directive_controller(&["0ba"]),
            mode: ControlMode::Global,
        });
        // Reads are unmasked throughout, so the pair decodes.
        let r = run_grid(&cfg, &Inputs::new(), 40).unwrap();
        assert_eq!(r.outputs_of("D").unwrap()[0], "1");
        cfg.controller.as_mut().unwrap().spec = directive_controller(&["0w0.9"]);
        // Without read access the decoder sees only blanks.
        let r = run_grid(&cfg, &Inputs::new(), 40).unwrap();
        assert_eq!(r.outputs_of("D").unwrap()[0], "");
    }

    #[test]
    fn malformed_directive_is_an_error() {
        let members = vec![Member::new("A", steady('0'))];
        let cfg = controlled(members, &["5ba"], ControlMode::Global);
        assert!(matches!(
            run_grid(&cfg, &Inputs::new(), 10),
            Err(GridError::Directive { tick: 5, .. })
        ));
    }

    #[test]
    fn blocked_by_schedule() {
        let mut cfg = GridConfig::new(vec![
            Member::new("A", steady('0')),
            Member::new("B", steady('1')),
        ]);
        cfg.schedule = ExchangeSchedule::Cycle(vec!["B".into(), "A".into(), "A".into()]);
        let r = run_grid(&cfg, &Inputs::new(), 6).unwrap();
        assert_eq!(r.space.contents(), "100100");
        assert!(r.trace.to_text().contains("block 1 A\n"));
    }

    #[test]
    fn stuck_members_keep_their_slots() {
        let stuck = parse(
            "alphabet: _ 0 1\nstates: s\nstart: s\ntapes: input work space\nrule: s 1** -> s -- SSS\n",
        )
        .unwrap();
        let cfg = GridConfig::new(vec![Member::new("S", stuck), Member::new("A", steady('0'))]);
        let r = run_grid(&cfg, &Inputs::new(), 4).unwrap();
        assert_eq!(r.space.contents(), "0000");
        assert_eq!(r.statuses[0].1, MemberStatus::Stuck);
        assert!(r.trace.to_text().contains("stuck 1 S\n"));
    }

    #[test]
    fn config_errors() {
        let dup = GridConfig::new(vec![
            Member::new("A", steady('0')),
            Member::new("A", steady('1')),
        ]);
        assert!(matches!(
            run_grid(&dup, &Inputs::new(), 1),
            Err(GridError::Config(ConfigError::DuplicateId(_)))
        ));
        let mut inputs = Inputs::new();
        inputs.insert("Z".into(), "1".into());
        assert!(matches!(
            run_grid(&alternating_writers(), &inputs, 1),
            Err(GridError::Config(ConfigError::UnknownInputId(_)))
        ));
        let mut arb = alternating_writers();
        arb.policy = Some(ConflictPolicy::ControllerArbitrated);
        assert!(matches!(
            run_grid(&arb, &Inputs::new(), 1),
            Err(GridError::Config(ConfigError::ArbitrationWithoutController))
        ));
        let mut pre = alternating_writers();
        pre.preload = "1*".into();
        assert!(matches!(
            run_grid(&pre, &Inputs::new(), 1),
            Err(GridError::Config(ConfigError::BadPreload('*')))
        ));
    }

    #[test]
    fn preload_is_written_at_tick_zero() {
        let mut cfg = alternating_writers();
        cfg.preload = "1_0".into();
        let r = run_grid(&cfg, &Inputs::new(), 2).unwrap();
        assert!(r
            .trace
            .to_text()
            .starts_with("write 0 @init 0 1\nwrite 0 @init 2 0\n"));
        assert_eq!(r.space.contents(), "1100");
        assert_eq!(replay(&r.trace).unwrap().contents(), "1100");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // A member that never touches the space behaves as it does alone,
        // with as many moves as its scale grants within the horizon.
        #[test]
        fn composition_locality(input in "[01]{0,30}", n in 1u64..5, extra in 0u64..4, horizon in 0u64..60) {
            let scale = TimeScale::rational(n, n + extra).unwrap();
            let mut members = alternating_writers().members;
            members.push(Member::new("P", input_copier()).with_scale(scale.clone()).with_input(input.clone()));
            let r = run_grid(&GridConfig::new(members), &Inputs::new(), horizon).unwrap();
            let budget = scale.ticks().take_while(|&t| t <= horizon).count() as u64;
            let alone = run(&Machine::new(input_copier()).unwrap(), &input, budget).unwrap();
            prop_assert_eq!(r.outputs_of("P").unwrap(), alone.outputs.as_slice());
        }

        #[test]
        fn runs_are_deterministic_and_replayable(seed in any::<u64>(), horizon in 0u64..80) {
            let mut cfg = GridConfig::new(vec![Member::new("A", steady('0')), Member::new("B", steady('1'))]);
            cfg.schedule = ExchangeSchedule::Random { seed };
            let a = run_grid(&cfg, &Inputs::new(), horizon).unwrap();
            let b = run_grid(&cfg, &Inputs::new(), horizon).unwrap();
            prop_assert_eq!(a.trace.to_text(), b.trace.to_text());
            prop_assert_eq!(replay(&a.trace).unwrap().contents(), a.space.contents());
        }
    }
}
