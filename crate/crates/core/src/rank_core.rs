//! Mann-Whitney, Wilcoxon rank-sum, standardized split statistics and
//! Pettitt's change-point statistic over a finite observation sequence.
//!
//! For a split index `1 <= t < l` the Mann-Whitney count is
//!
//! ```text
//! MW(t, l) = #{ (i, j) : i <= t < j <= l, x_j < x_i }
//! ```
//!
//! with a strict inequality, so tied pairs contribute nothing. Under an
//! in-control process its mean is `t(l-t)/2` and its variance
//! `t(l-t)(l+1)/12`; `SMW(t, l)` is the count centered and scaled by those.
//!
//! Ties are never rejected here. They are counted so callers can surface a
//! warning; the moment formulas assume a continuous distribution and are not
//! corrected for ties.

use crate::error::{Error, Result};

/// Ordered real measurements; the first `m` form the in-control reference sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSequence {
    values: Vec<f64>,
    m: usize,
    ties: usize,
}

impl ObservationSequence {
    /// Builds a sequence, rejecting non-finite values and `m > len`.
    pub fn new(values: Vec<f64>, m: usize) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Ingestion(format!(
                "observation {} is not finite ({v})",
                i + 1
            )));
        }
        if m > values.len() {
            return Err(Error::domain(format!(
                "reference size m={m} exceeds sequence length {}",
                values.len()
            )));
        }
        let ties = count_ties(&values);
        Ok(Self { values, m, ties })
    }

    /// A sequence with no designated reference sample (`m = 0`).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of reference observations.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn reference(&self) -> &[f64] {
        &self.values[..self.m]
    }

    pub fn future(&self) -> &[f64] {
        &self.values[self.m..]
    }

    /// Number of observations equal to some earlier observation.
    pub fn tie_count(&self) -> usize {
        self.ties
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn count_ties(values: &[f64]) -> usize {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).filter(|w| w[0] == w[1]).count()
}

/// One split of the sequence: the raw count and its standardized value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitStatistic {
    pub t: usize,
    pub mw: u64,
    pub smw: f64,
}

/// Pettitt's statistic `T_l = max_t |SMW(t, l)|` and the first split attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PettittResult {
    pub t_hat: usize,
    pub t_l: f64,
}

fn check_split(t: usize, l: usize) -> Result<()> {
    if t == 0 || t >= l {
        return Err(Error::domain(format!(
            "split index t={t} outside 1..{l} (exclusive) for length {l}"
        )));
    }
    Ok(())
}

/// Mann-Whitney count `MW(t, l)` with the strict inequality.
pub fn mann_whitney(seq: &ObservationSequence, t: usize) -> Result<u64> {
    let l = seq.len();
    check_split(t, l)?;
    let mut later = seq.values[t..].to_vec();
    later.sort_by(f64::total_cmp);
    let count = seq.values[..t]
        .iter()
        .map(|&xi| later.partition_point(|&xj| xj < xi) as u64)
        .sum();
    Ok(count)
}

/// Ranks `1..=l` of every observation among the whole sequence. Equal values
/// are ordered by position, which keeps `MW = W - t(t+1)/2` exact even with ties.
pub fn ordinal_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0u64; values.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r as u64 + 1;
    }
    ranks
}

/// Wilcoxon rank sum `W(t, l)` of the first `t` observations.
pub fn wilcoxon_rank_sum(seq: &ObservationSequence, t: usize) -> Result<u64> {
    check_split(t, seq.len())?;
    Ok(ordinal_ranks(&seq.values)[..t].iter().sum())
}

/// In-control mean `t(l-t)/2` of `MW(t, l)`.
pub fn null_mean(t: usize, l: usize) -> f64 {
    (t * (l - t)) as f64 / 2.0
}

/// In-control variance `t(l-t)(l+1)/12` of `MW(t, l)`.
pub fn null_variance(t: usize, l: usize) -> f64 {
    (t as u64 * (l - t) as u64 * (l as u64 + 1)) as f64 / 12.0
}

#[inline]
fn standardize_unchecked(mw: u64, t: usize, l: usize) -> f64 {
    (mw as f64 - null_mean(t, l)) / null_variance(t, l).sqrt()
}

/// Standardized statistic `SMW(t, l)`.
pub fn standardize(mw: u64, t: usize, l: usize) -> Result<f64> {
    check_split(t, l)?;
    Ok(standardize_unchecked(mw, t, l))
}

/// `MW(t, l)` for every `t = 1..l-1` from one sort and prefix rank sums.
pub fn mw_counts(values: &[f64]) -> Vec<u64> {
    let ranks = ordinal_ranks(values);
    let mut prefix = 0u64;
    let mut out = Vec::with_capacity(values.len().saturating_sub(1));
    for (i, r) in ranks.iter().take(values.len().saturating_sub(1)).enumerate() {
        prefix += r;
        let t = i as u64 + 1;
        out.push(prefix - t * (t + 1) / 2);
    }
    out
}

fn profile_from_counts(counts: &[u64]) -> Vec<SplitStatistic> {
    let l = counts.len() + 1;
    counts
        .iter()
        .enumerate()
        .map(|(i, &mw)| SplitStatistic {
            t: i + 1,
            mw,
            smw: standardize_unchecked(mw, i + 1, l),
        })
        .collect()
}

/// All split statistics for `t = 1..l-1`, in `O(l log l)`.
pub fn smw_profile(seq: &ObservationSequence) -> Result<Vec<SplitStatistic>> {
    if seq.len() < 2 {
        return Err(Error::domain(format!(
            "SMW profile needs at least 2 observations, got {}",
            seq.len()
        )));
    }
    Ok(profile_from_counts(&mw_counts(&seq.values)))
}

/// Pettitt's statistic; ties in `|SMW|` resolve to the smallest `t`.
pub fn pettitt(seq: &ObservationSequence) -> Result<PettittResult> {
    let profile = smw_profile(seq)?;
    Ok(pettitt_from_profile(&profile))
}

pub(crate) fn pettitt_from_profile(profile: &[SplitStatistic]) -> PettittResult {
    let mut best = PettittResult {
        t_hat: profile[0].t,
        t_l: profile[0].smw.abs(),
    };
    for s in &profile[1..] {
        if s.smw.abs() > best.t_l {
            best = PettittResult {
                t_hat: s.t,
                t_l: s.smw.abs(),
            };
        }
    }
    best
}

/// Per-length scale factors so hot loops can standardize many splits of the
/// same total length without recomputing the moments. Results are bit-identical
/// to [`standardize`].
#[derive(Debug, Clone)]
pub struct SmwScale {
    l: usize,
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl SmwScale {
    pub fn new(l: usize) -> Self {
        let ts = 1..l.max(1);
        Self {
            l,
            mean: ts.clone().map(|t| null_mean(t, l)).collect(),
            sd: ts.map(|t| null_variance(t, l).sqrt()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.l == 0
    }

    /// `SMW(t, l)`; `t` must lie in `1..l`.
    #[inline]
    pub fn smw(&self, t: usize, mw: u64) -> f64 {
        (mw as f64 - self.mean[t - 1]) / self.sd[t - 1]
    }
}

/// Incrementally maintained Mann-Whitney counts for a growing sequence.
///
/// Appending `x` to a sequence of length `l-1` changes every split:
/// `MW(t, l) = MW(t, l-1) + #{i <= t : x_i > x}`. One pass over the stored
/// values yields all the prefix counts, the rank of `x`, and tie detection.
#[derive(Debug, Clone, Default)]
pub struct RankEngine {
    values: Vec<f64>,
    // counts[t - 1] = MW(t, l)
    counts: Vec<u64>,
    ties: usize,
}

impl RankEngine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(cap: usize) -> Self {
        Self {
            values: Vec::with_capacity(cap),
            counts: Vec::with_capacity(cap),
            ties: 0,
        }
    }

    pub fn from_sequence(seq: &ObservationSequence) -> Self {
        Self {
            counts: mw_counts(&seq.values),
            values: seq.values.clone(),
            ties: seq.ties,
        }
    }

    /// Appends one observation and returns its rank among all observations
    /// so far (1-based, strict: `1 + #{earlier values < x}`).
    pub fn append(&mut self, x: f64) -> Result<usize> {
        if !x.is_finite() {
            return Err(Error::Ingestion(format!(
                "observation {} is not finite ({x})",
                self.values.len() + 1
            )));
        }
        Ok(self.push_finite(x))
    }

    #[inline]
    pub(crate) fn push_finite(&mut self, x: f64) -> usize {
        let old = self.values.len();
        if old > 0 {
            self.counts.push(0);
        }
        let mut greater = 0u64;
        let mut equal = 0u64;
        for (v, c) in self.values.iter().zip(self.counts.iter_mut()) {
            greater += (*v > x) as u64;
            equal += (*v == x) as u64;
            *c += greater;
        }
        if equal > 0 {
            self.ties += 1;
        }
        self.values.push(x);
        old - greater as usize - equal as usize + 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `MW(t, l)` for `t = 1..l-1`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn tie_count(&self) -> usize {
        self.ties
    }

    /// Drops everything after the first `len` observations.
    pub fn truncate(&mut self, len: usize) {
        if len >= self.values.len() {
            return;
        }
        let seq = ObservationSequence::new(self.values[..len].to_vec(), 0)
            .expect("stored values are finite");
        *self = Self::from_sequence(&seq);
    }

    pub fn profile(&self) -> Result<Vec<SplitStatistic>> {
        if self.values.len() < 2 {
            return Err(Error::domain(format!(
                "SMW profile needs at least 2 observations, got {}",
                self.values.len()
            )));
        }
        Ok(profile_from_counts(&self.counts))
    }
}
