//! Upper-side CUSUM chart on the standardized Mann-Whitney statistic.
//!
//! After the `n`-th future observation the whole path
//!
//! ```text
//! S_j = max(0, S_{j-1} + SMW(j, m+n) - k),   j = m-m0 .. m+n-1,   S_{m-m0-1} = 0
//! ```
//!
//! is rebuilt, because every `SMW(j, m+n)` depends on the current total
//! length. The chart signals when `S_max = max_j S_j` reaches the decision
//! value `h(m, n)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rank_core::{standardize, ObservationSequence, RankEngine, SmwScale};

/// Default reference value.
pub const DEFAULT_K: f64 = 0.5;
/// Default look-back into the reference sample.
pub const DEFAULT_M0: usize = 4;
/// Smallest supported reference sample.
pub const MIN_REFERENCE: usize = 10;
/// Conditional false-alarm rates and the in-control ARLs they target.
pub const STANDARD_ALPHAS: [(f64, f64); 4] =
    [(0.01, 100.0), (0.005, 200.0), (0.0027, 370.0), (0.002, 500.0)];

/// Which sign of `SMW` the chart accumulates.
///
/// `MW` counts later observations falling *below* earlier ones, so an upward
/// shift in the future data pushes `SMW` down. `Minus` accumulates `-SMW` and
/// therefore reacts to upward shifts; `Plus` reacts to downward shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Side {
    Plus,
    #[default]
    Minus,
}

impl Side {
    #[inline]
    pub fn apply(self, smw: f64) -> f64 {
        match self {
            Side::Plus => smw,
            Side::Minus => -smw,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Side::Plus),
            "minus" | "-" => Ok(Side::Minus),
            other => Err(Error::config(format!(
                "unknown side `{other}` (expected plus or minus)"
            ))),
        }
    }
}

/// Chart parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartConfig {
    pub m: usize,
    pub m0: usize,
    pub k: f64,
    pub alpha: f64,
    pub side: Side,
}

impl ChartConfig {
    pub fn new(m: usize, m0: usize, k: f64, alpha: f64, side: Side) -> Result<Self> {
        let cfg = Self {
            m,
            m0,
            k,
            alpha,
            side,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `m0 = 4`, `k = 1/2`, accumulating `-SMW`.
    pub fn standard(m: usize, alpha: f64) -> Result<Self> {
        Self::new(m, DEFAULT_M0, DEFAULT_K, alpha, Side::default())
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < MIN_REFERENCE {
            return Err(Error::config(format!(
                "m={} is below the supported minimum {MIN_REFERENCE}",
                self.m
            )));
        }
        // The first split m-m0 must be a valid index (t >= 1).
        if self.m0 >= self.m {
            return Err(Error::config(format!(
                "m0={} must be smaller than m={}",
                self.m0, self.m
            )));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::config(format!("k={} must be positive", self.k)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!(
                "alpha={} must lie in (0, 1)",
                self.alpha
            )));
        }
        Ok(())
    }

    /// First split index `m - m0` of the path.
    pub fn first_split(&self) -> usize {
        self.m - self.m0
    }
}

/// One reflected CUSUM update.
#[inline]
pub fn cusum_step(prev: f64, smw: f64, k: f64) -> f64 {
    (prev + smw - k).max(0.0)
}

/// CUSUM path `S_j, j = m-m0 .. m+n-1` for the sequence's current length.
pub fn cusum_path(seq: &ObservationSequence, cfg: &ChartConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if seq.m() != cfg.m {
        return Err(Error::config(format!(
            "sequence has m={} but chart is configured for m={}",
            seq.m(),
            cfg.m
        )));
    }
    if seq.len() <= cfg.m {
        return Err(Error::domain("cusum path needs at least one future observation (n >= 1)"));
    }
    let engine = RankEngine::from_sequence(seq);
    let mut path = Vec::new();
    fill_path(engine.counts(), cfg, &mut path);
    Ok(path)
}

pub(crate) fn fill_path(counts: &[u64], cfg: &ChartConfig, path: &mut Vec<f64>) {
    let l = counts.len() + 1;
    path.clear();
    let mut s = 0.0;
    for t in cfg.first_split()..l {
        let smw = standardize(counts[t - 1], t, l).expect("split in range");
        s = cusum_step(s, cfg.side.apply(smw), cfg.k);
        path.push(s);
    }
}

/// `S_max` straight from the counts without materializing the path.
#[inline]
pub(crate) fn s_max_from_counts(counts: &[u64], scale: &SmwScale, cfg: &ChartConfig) -> f64 {
    let l = counts.len() + 1;
    debug_assert_eq!(scale.len(), l);
    let mut s = 0.0f64;
    let mut best = 0.0f64;
    for t in cfg.first_split()..l {
        s = cusum_step(s, cfg.side.apply(scale.smw(t, counts[t - 1])), cfg.k);
        best = best.max(s);
    }
    best
}

/// Largest value on a CUSUM path.
pub fn s_max(path: &[f64]) -> Result<f64> {
    path.iter()
        .copied()
        .reduce(f64::max)
        .ok_or_else(|| Error::domain("S_max of an empty path"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct SeriesKey {
    m: usize,
    m0: usize,
    // alpha > 0, so the bit pattern orders like the value
    alpha_bits: u64,
}

impl SeriesKey {
    fn new(m: usize, m0: usize, alpha: f64) -> Self {
        Self {
            m,
            m0,
            alpha_bits: alpha.to_bits(),
        }
    }

    fn alpha(&self) -> f64 {
        f64::from_bits(self.alpha_bits)
    }
}

impl fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(m={}, m0={}, alpha={})", self.m, self.m0, self.alpha())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Series {
    grid: Vec<usize>,
    h: Vec<f64>,
    sequences: u64,
    seed: u64,
}

/// One flattened table entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    pub m: usize,
    pub m0: usize,
    pub alpha: f64,
    pub n: usize,
    pub h: f64,
    pub sequences: u64,
    pub seed: u64,
}

/// Calibrated decision values `h(m, n; alpha)` for one or more `(m, m0, alpha)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecisionValueTable {
    series: BTreeMap<SeriesKey, Series>,
}

impl DecisionValueTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds (or replaces) the values for one `(m, m0, alpha)`; `points` must
    /// have strictly increasing `n >= 1` and positive `h`.
    pub fn insert_series(
        &mut self,
        m: usize,
        m0: usize,
        alpha: f64,
        points: &[(usize, f64)],
        sequences: u64,
        seed: u64,
    ) -> Result<()> {
        if points.is_empty() {
            return Err(Error::config("decision-value series is empty"));
        }
        if points[0].0 == 0 || points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::config(
                "decision-value grid must be strictly increasing with n >= 1",
            ));
        }
        if let Some(&(n, h)) = points.iter().find(|(_, h)| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::config(format!("decision value h={h} at n={n} is not positive")));
        }
        self.series.insert(
            SeriesKey::new(m, m0, alpha),
            Series {
                grid: points.iter().map(|p| p.0).collect(),
                h: points.iter().map(|p| p.1).collect(),
                sequences,
                seed,
            },
        );
        Ok(())
    }

    /// Rebuilds a table from flattened entries (any order).
    pub fn from_entries(entries: &[TableEntry]) -> Result<Self> {
        type Series = (Vec<(usize, f64)>, u64, u64);
        let mut grouped: BTreeMap<SeriesKey, Series> = BTreeMap::new();
        for e in entries {
            let g = grouped
                .entry(SeriesKey::new(e.m, e.m0, e.alpha))
                .or_insert((Vec::new(), e.sequences, e.seed));
            g.0.push((e.n, e.h));
        }
        let mut table = Self::new();
        for (key, (mut points, sequences, seed)) in grouped {
            points.sort_by_key(|p| p.0);
            table.insert_series(key.m, key.m0, key.alpha(), &points, sequences, seed)?;
        }
        Ok(table)
    }

    pub fn entries(&self) -> Vec<TableEntry> {
        self.series
            .iter()
            .flat_map(|(key, s)| {
                s.grid.iter().zip(&s.h).map(move |(&n, &h)| TableEntry {
                    m: key.m,
                    m0: key.m0,
                    alpha: key.alpha(),
                    n,
                    h,
                    sequences: s.sequences,
                    seed: s.seed,
                })
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn merge(&mut self, other: DecisionValueTable) {
        self.series.extend(other.series);
    }

    fn series(&self, m: usize, m0: usize, alpha: f64) -> Result<&Series> {
        let key = SeriesKey::new(m, m0, alpha);
        self.series.get(&key).ok_or_else(|| Error::Lookup {
            requested: key.to_string(),
            available: if self.series.is_empty() {
                "none".to_string()
            } else {
                self.series
                    .keys()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            },
        })
    }

    /// The ordered `n` values tabulated for `(m, m0, alpha)`.
    pub fn n_grid(&self, m: usize, m0: usize, alpha: f64) -> Result<&[usize]> {
        Ok(&self.series(m, m0, alpha)?.grid)
    }

    /// Decision value for step `n`: the entry at the largest grid point
    /// `n' <= n`, or the last entry beyond the grid.
    pub fn lookup_h(&self, m: usize, m0: usize, alpha: f64, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::domain("decision values start at n = 1"));
        }
        let s = self.series(m, m0, alpha)?;
        let idx = s.grid.partition_point(|&g| g <= n);
        Ok(s.h[idx.saturating_sub(1)])
    }

    /// Largest drop `h(n) - h(n')` over successive grid points; zero when the
    /// series is non-decreasing.
    pub fn max_decrease(&self, m: usize, m0: usize, alpha: f64) -> Result<f64> {
        let s = self.series(m, m0, alpha)?;
        Ok(s.h
            .windows(2)
            .map(|w| (w[0] - w[1]).max(0.0))
            .fold(0.0, f64::max))
    }
}

/// Outcome of one monitoring step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    InControl,
    Signal,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::InControl => "in-control",
            Status::Signal => "signal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorVerdict {
    pub status: Status,
    pub s_max: f64,
    pub h_used: f64,
    pub n: usize,
}

/// Monitoring state of one stream: reference sample plus accepted future data.
#[derive(Debug, Clone)]
pub struct ChartState {
    cfg: ChartConfig,
    engine: RankEngine,
    n: usize,
    path: Vec<f64>,
    s_max: f64,
    signaled: bool,
    signal_n: Option<usize>,
}

impl ChartState {
    pub fn new(reference: &[f64], cfg: ChartConfig) -> Result<Self> {
        cfg.validate()?;
        if reference.len() != cfg.m {
            return Err(Error::config(format!(
                "reference sample has {} observations but m={}",
                reference.len(),
                cfg.m
            )));
        }
        let mut engine = RankEngine::with_capacity(cfg.m + 64);
        for &x in reference {
            engine.append(x)?;
        }
        Ok(Self {
            cfg,
            engine,
            n: 0,
            path: Vec::new(),
            s_max: 0.0,
            signaled: false,
            signal_n: None,
        })
    }

    pub fn config(&self) -> &ChartConfig {
        &self.cfg
    }

    /// Future observations accepted so far.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Path `S_j, j = m-m0 .. m+n-1` as of the latest step.
    pub fn path(&self) -> &[f64] {
        &self.path
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn signaled(&self) -> bool {
        self.signaled
    }

    /// Step of the first signal, if any.
    pub fn signal_n(&self) -> Option<usize> {
        self.signal_n
    }

    pub fn observations(&self) -> &[f64] {
        self.engine.values()
    }

    pub fn tie_count(&self) -> usize {
        self.engine.tie_count()
    }

    /// Accepts the next future observation and applies the control rule with
    /// `h` taken from `table`.
    pub fn step(&mut self, x: f64, table: &DecisionValueTable) -> Result<MonitorVerdict> {
        let h = table.lookup_h(self.cfg.m, self.cfg.m0, self.cfg.alpha, self.n + 1)?;
        self.step_with_h(x, h)
    }

    /// As [`step`](Self::step) with an explicit decision value.
    pub fn step_with_h(&mut self, x: f64, h: f64) -> Result<MonitorVerdict> {
        if self.signaled {
            return Err(Error::State(format!(
                "chart signaled at n={}; no further observations accepted",
                self.signal_n.unwrap_or(self.n)
            )));
        }
        self.engine.append(x)?;
        self.n += 1;
        fill_path(self.engine.counts(), &self.cfg, &mut self.path);
        self.s_max = s_max(&self.path)?;
        let status = if self.s_max >= h {
            self.signaled = true;
            self.signal_n.get_or_insert(self.n);
            Status::Signal
        } else {
            Status::InControl
        };
        Ok(MonitorVerdict {
            status,
            s_max: self.s_max,
            h_used: h,
            n: self.n,
        })
    }

    /// Clears the signaled flag so monitoring can continue on the same
    /// history. The first signal step is kept.
    pub fn resume(&mut self) {
        self.signaled = false;
    }
}
