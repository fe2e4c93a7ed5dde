//! Global time: per-machine time scales, their interleaving, and exchange
//! schedules.

mod exchange;
mod scale;

pub use exchange::ExchangeSchedule;
pub use scale::{interleaving, ContinuedFraction, Irrational, ScaleError, TimeScale};
