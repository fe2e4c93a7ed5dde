use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::Tick;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScaleError {
    #[error("move indices start at 1")]
    ZeroIndex,
    #[error("move {index} is beyond the {len}-entry table")]
    BeyondTable { index: u64, len: usize },
    #[error("convergents of {name} too coarse for move {index}")]
    PrecisionExhausted { name: String, index: u64 },
    #[error("rational scale needs 1 <= moves <= ticks, got {moves}:{ticks}")]
    BadRatio { moves: u64, ticks: u64 },
    #[error("table ticks must be positive and strictly increasing")]
    BadTable,
    #[error("unknown irrational constant `{0}`")]
    UnknownConstant(String),
    #[error("{0}")]
    Syntax(String),
}

/// A simple continued fraction `[a0; a1, ..., (p1, ..., pk)]` with an
/// eventually periodic tail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuedFraction {
    pub prefix: Vec<u64>,
    pub period: Vec<u64>,
}

impl ContinuedFraction {
    /// The expansion of `sqrt(d)` for non-square `d`.
    pub fn sqrt(d: u64) -> Option<Self> {
        let a0 = d.isqrt();
        if a0 * a0 == d {
            return None;
        }
        let (mut m, mut q, mut a) = (0u64, 1u64, a0);
        let mut period = Vec::new();
        while a != 2 * a0 {
            m = q * a - m;
            q = (d - m * m) / q;
            a = (a0 + m) / q;
            period.push(a);
        }
        Some(Self {
            prefix: vec![a0],
            period,
        })
    }

    pub fn golden() -> Self {
        Self {
            prefix: vec![1],
            period: vec![1],
        }
    }

    /// Partial quotients, repeating the period forever.
    pub fn terms(&self) -> impl Iterator<Item = u64> + '_ {
        self.prefix
            .iter()
            .chain(self.period.iter().cycle())
            .copied()
    }
}

/// A quadratic irrational `alpha > 1` held as a named continued fraction
/// and its convergents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Irrational {
    name: String,
    cf: ContinuedFraction,
    /// Convergents `h/k`, alternating around `alpha`.
    convergents: Vec<(u128, u128)>,
}

// Keeps `index * h` inside u128 for any u64 index.
const DENOMINATOR_CAP: u128 = 1 << 60;

impl Irrational {
    pub fn named(name: &str) -> Result<Self, ScaleError> {
        let cf = match name {
            "golden" => ContinuedFraction::golden(),
            _ => name
                .strip_prefix("sqrt")
                .and_then(|d| d.parse::<u64>().ok())
                .filter(|&d| d >= 2)
                .and_then(ContinuedFraction::sqrt)
                .ok_or_else(|| ScaleError::UnknownConstant(name.to_string()))?,
        };
        Ok(Self::from_cf(name, cf))
    }

    pub fn sqrt2() -> Self {
        Self::named("sqrt2").expect("sqrt2 is a known constant")
    }

    fn from_cf(name: &str, cf: ContinuedFraction) -> Self {
        // h1/k1 is the latest convergent, h2/k2 the one before it.
        let (mut h1, mut h2) = (1u128, 0u128);
        let (mut k1, mut k2) = (0u128, 1u128);
        let mut convergents = Vec::new();
        for a in cf.terms() {
            let a = u128::from(a);
            let h = a * h1 + h2;
            let k = a * k1 + k2;
            if k > DENOMINATOR_CAP {
                break;
            }
            convergents.push((h, k));
            (h2, h1) = (h1, h);
            (k2, k1) = (k1, k);
        }
        Self {
            name: name.to_string(),
            cf,
            convergents,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn continued_fraction(&self) -> &ContinuedFraction {
        &self.cf
    }

    /// `floor(index * alpha)`, exact. Two consecutive convergents bracket
    /// `alpha` strictly, so once both give the same floor that floor is
    /// the answer.
    pub fn floor_mul(&self, index: u64) -> Result<u64, ScaleError> {
        let i = u128::from(index);
        for pair in self.convergents.windows(2) {
            let (h0, k0) = pair[0];
            let (h1, k1) = pair[1];
            let f0 = i * h0 / k0;
            let f1 = i * h1 / k1;
            if f0 == f1 {
                return u64::try_from(f0).map_err(|_| ScaleError::PrecisionExhausted {
                    name: self.name.clone(),
                    index,
                });
            }
        }
        Err(ScaleError::PrecisionExhausted {
            name: self.name.clone(),
            index,
        })
    }
}

/// Maps a machine's local move index to the global tick of that move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimeScale {
    Identity,
    /// `moves` local moves per `ticks` global ticks: move `i` happens at
    /// `ceil(i * ticks / moves)`.
    Rational {
        moves: u64,
        ticks: u64,
    },
    /// Move `i` happens at `floor(i * alpha)`.
    Irrational(Irrational),
    /// Explicit move ticks; moves beyond the table never happen.
    Table(Vec<Tick>),
}

impl TimeScale {
    pub fn rational(moves: u64, ticks: u64) -> Result<Self, ScaleError> {
        if moves == 0 || ticks < moves {
            return Err(ScaleError::BadRatio { moves, ticks });
        }
        Ok(TimeScale::Rational { moves, ticks })
    }

    pub fn table(ticks: Vec<Tick>) -> Result<Self, ScaleError> {
        let increasing = ticks.windows(2).all(|w| w[0] < w[1]);
        if !increasing || ticks.first() == Some(&0) {
            return Err(ScaleError::BadTable);
        }
        Ok(TimeScale::Table(ticks))
    }

    pub fn irrational(name: &str) -> Result<Self, ScaleError> {
        Irrational::named(name).map(TimeScale::Irrational)
    }

    /// Global tick of local move `index` (1-based).
    pub fn move_tick(&self, index: u64) -> Result<Tick, ScaleError> {
        if index == 0 {
            return Err(ScaleError::ZeroIndex);
        }
        match self {
            TimeScale::Identity => Ok(index),
            TimeScale::Rational { moves, ticks } => Ok((index * ticks).div_ceil(*moves)),
            TimeScale::Irrational(alpha) => alpha.floor_mul(index),
            TimeScale::Table(table) => {
                let slot = usize::try_from(index - 1).unwrap_or(usize::MAX);
                table.get(slot).copied().ok_or(ScaleError::BeyondTable {
                    index,
                    len: table.len(),
                })
            }
        }
    }

    /// Move ticks in order, ending where the scale runs out.
    pub fn ticks(&self) -> impl Iterator<Item = Tick> + '_ {
        (1u64..).map_while(move |i| self.move_tick(i).ok())
    }

    /// Identity and rational scales are synchronized with the global clock.
    pub fn is_commensurable(&self) -> bool {
        matches!(self, TimeScale::Identity | TimeScale::Rational { .. })
    }
}

impl fmt::Display for TimeScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeScale::Identity => f.write_str("identity"),
            TimeScale::Rational { moves, ticks } => write!(f, "rational {moves} {ticks}"),
            TimeScale::Irrational(a) => write!(f, "irrational {}", a.name()),
            TimeScale::Table(t) => {
                let items: Vec<String> = t.iter().map(|x| x.to_string()).collect();
                write!(f, "table [{}]", items.join(" "))
            }
        }
    }
}

/// Parses the contents of a `[ ... ]` list.
pub(crate) fn bracket_list(s: &str) -> Option<Vec<&str>> {
    let inner = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    Some(inner.split_whitespace().collect())
}

impl FromStr for TimeScale {
    type Err = ScaleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (head, rest) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
        let args: Vec<&str> = rest.split_whitespace().collect();
        let num = |t: &str| {
            t.parse::<u64>()
                .map_err(|_| ScaleError::Syntax(format!("bad number `{t}`")))
        };
        match (head, args.as_slice()) {
            ("identity", []) => Ok(TimeScale::Identity),
            ("rational", [n, m]) => TimeScale::rational(num(n)?, num(m)?),
            ("irrational", [name]) => TimeScale::irrational(name),
            ("table", _) => {
                let items = bracket_list(rest)
                    .ok_or_else(|| ScaleError::Syntax("table needs `[t1 t2 ...]`".into()))?;
                TimeScale::table(items.into_iter().map(num).collect::<Result<_, _>>()?)
            }
            _ => Err(ScaleError::Syntax(format!("unknown scale `{s}`"))),
        }
    }
}

/// All moves at ticks `<= horizon`, ordered by tick and, within a tick, by
/// position in `scales`.
pub fn interleaving(scales: &[TimeScale], horizon: Tick) -> Vec<(Tick, usize)> {
    let mut events: Vec<(Tick, usize)> = scales
        .iter()
        .enumerate()
        .flat_map(|(m, scale)| {
            scale
                .ticks()
                .take_while(move |&t| t <= horizon)
                .map(move |t| (t, m))
        })
        .collect();
    events.sort_unstable();
    events
}
