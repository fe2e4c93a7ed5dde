//! Deterministic simulation of finite systems of Turing machines that
//! interact through a shared one-sided tape.
//!
//! The pieces, bottom-up:
//!
//! * [`machine`]: single machines with input, working and output tapes.
//! * [`space`]: the shared communication tape and its write log.
//! * [`schedule`]: global ticks, per-machine time scales and exchange
//!   schedules.
//! * [`grid`]: composition of machines, space, schedule and controller;
//!   the tick loop, traces and replay.
//! * [`constructions`]: ready-made grids for the interaction scenarios.
//! * [`equivalence`]: flattening controlled grids into one sequential
//!   execution, and dovetailed output enumeration.

pub mod constructions;
pub mod equivalence;
pub mod grid;
pub mod machine;
pub mod manifest;
pub mod schedule;
pub mod space;

/// Global time. Machine moves happen at ticks `1, 2, ...`; tick 0 is
/// reserved for preloaded space contents.
pub type Tick = u64;

pub use grid::{classify, replay, run_grid, GridConfig, Regime, Trace};
pub use machine::{Machine, MachineSpec, Symbol, BLANK};
pub use space::CommSpace;
