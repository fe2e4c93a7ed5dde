//! Grids: members, communication space, schedule and controller composed
//! into one deterministic tick loop.

mod config;
mod directive;
mod run;
mod text;
mod trace;

pub use config::{
    classify, ConfigError, ControlMode, Controller, Grid, GridConfig, Inputs, Member, Regime,
    DEFAULT_ARBITER_BUDGET, MAX_CONTROLLED_MEMBERS, PRELOAD_WRITER,
};
pub use directive::{
    arbitrate, conflict_input, parse_directive, Directive, DirectiveDecoder, DirectiveError,
    Masked, Permission,
};
pub use run::{run_grid, GridError, GridRun};
pub use text::{parse_config, print_config, ConfigParseError};
pub use trace::{
    first_divergence, replay, Event, MemberStatus, ReplayError, Trace, TraceDiff, TraceParseError,
};
