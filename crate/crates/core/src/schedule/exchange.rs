use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::scale::bracket_list;
use crate::Tick;

/// Which members may touch the communication space at a given tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExchangeSchedule {
    /// Every member, every tick.
    Always,
    /// Tick `t` admits only `ids[(t - 1) % len]`. A computable rule.
    Cycle(Vec<String>),
    /// Tick `t` admits only `ids[t - 1]`; ticks past the end admit nobody.
    /// Stands in for an externally supplied, non-computable sequence.
    Injected(Vec<String>),
    /// Each (tick, member) pair is admitted with probability 1/2, as a pure
    /// function of the seed.
    Random { seed: u64 },
}

/// FNV-1a; keys the random stream by member id.
fn stream_id(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

impl ExchangeSchedule {
    pub fn admits(&self, tick: Tick, id: &str) -> bool {
        match self {
            ExchangeSchedule::Always => true,
            ExchangeSchedule::Cycle(ids) => {
                tick > 0 && !ids.is_empty() && ids[((tick - 1) % ids.len() as u64) as usize] == id
            }
            ExchangeSchedule::Injected(ids) => {
                tick > 0
                    && usize::try_from(tick - 1)
                        .ok()
                        .and_then(|i| ids.get(i))
                        .is_some_and(|x| x == id)
            }
            ExchangeSchedule::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(stream_id(id));
                rng.set_word_pos(u128::from(tick));
                rng.next_u32() & 1 == 1
            }
        }
    }

    /// Member ids the schedule names explicitly.
    pub fn named_ids(&self) -> &[String] {
        match self {
            ExchangeSchedule::Cycle(ids) | ExchangeSchedule::Injected(ids) => ids,
            _ => &[],
        }
    }

    pub fn is_injected(&self) -> bool {
        matches!(self, ExchangeSchedule::Injected(_))
    }
}

impl fmt::Display for ExchangeSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExchangeSchedule::Always => f.write_str("always"),
            ExchangeSchedule::Cycle(ids) => write!(f, "cycle [{}]", ids.join(" ")),
            ExchangeSchedule::Injected(ids) => write!(f, "injected [{}]", ids.join(" ")),
            ExchangeSchedule::Random { seed } => write!(f, "random {seed}"),
        }
    }
}

impl FromStr for ExchangeSchedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (head, rest) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
        let ids = || {
            bracket_list(rest)
                .map(|v| v.into_iter().map(String::from).collect())
                .ok_or_else(|| format!("`{head}` needs `[id id ...]`"))
        };
        match head {
            "always" if rest.trim().is_empty() => Ok(ExchangeSchedule::Always),
            "cycle" => Ok(ExchangeSchedule::Cycle(ids()?)),
            "injected" => Ok(ExchangeSchedule::Injected(ids()?)),
            "random" => rest
                .trim()
                .parse()
                .map(|seed| ExchangeSchedule::Random { seed })
                .map_err(|_| format!("bad seed `{}`", rest.trim())),
            _ => Err(format!("unknown schedule `{s}`")),
        }
    }
}
