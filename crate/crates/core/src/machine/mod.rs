//! Single deterministic Turing machines: descriptions, validation and
//! execution.

mod exec;
pub mod format;
mod spec;

pub use exec::{
    run, BlankSpace, Effects, InputError, Machine, MachineConfig, Outcome, RunResult, ScratchSpace,
    SpaceView, SpaceWrite, Step,
};
pub use format::ParseError;
pub(crate) use spec::is_reserved;
pub use spec::{
    validate, Emit, MachineSpec, Move, Pattern, Rule, SpaceOp, Symbol, TapeRoster,
    ValidationReport, Violation, BLANK,
};
