//! Comparator statistics from other nonparametric charts, at statistic level:
//!
//! * the maximum `|SMW|` over the future splits (SMW chart),
//! * Bakir-Reynolds within-group signed-rank sums and their CUSUM,
//! * McDonald's sequential-rank CUSUM,
//! * Yang-Cheng's exceedance count.
//!
//! None of these carry calibrated decision values here.

use std::fmt;
use std::str::FromStr;

use crate::chart_engine::cusum_step;
use crate::error::{Error, Result};
use crate::rank_core::{smw_profile, ObservationSequence};

/// How ties (and zeros, for signed ranks) are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// Reject ties, as the continuous model assumes.
    #[default]
    Strict,
    /// Midranks for tied values and `sign(0) = 0`. Not part of the original
    /// definitions.
    Lenient,
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TiePolicy::Strict => "strict",
            TiePolicy::Lenient => "lenient",
        })
    }
}

impl FromStr for TiePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(TiePolicy::Strict),
            "lenient" => Ok(TiePolicy::Lenient),
            other => Err(Error::config(format!(
                "unknown tie policy `{other}` (expected strict or lenient)"
            ))),
        }
    }
}

/// `max |SMW(t, m+n)|` over `m <= t < m+n`.
pub fn zhou_smw_stat(seq: &ObservationSequence, m: usize, n: usize) -> Result<f64> {
    if n == 0 || m == 0 {
        return Err(Error::domain(format!(
            "SMW chart statistic needs m >= 1 and n >= 1 (got m={m}, n={n})"
        )));
    }
    if seq.len() != m + n {
        return Err(Error::domain(format!(
            "sequence length {} does not equal m + n = {}",
            seq.len(),
            m + n
        )));
    }
    let profile = smw_profile(seq)?;
    Ok(profile[m - 1..]
        .iter()
        .map(|s| s.smw.abs())
        .fold(0.0, f64::max))
}

/// A group of observations and its signed-rank sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedRankGroup {
    pub observations: Vec<f64>,
    pub sr: f64,
}

impl SignedRankGroup {
    pub fn new(observations: Vec<f64>, policy: TiePolicy) -> Result<Self> {
        let sr = signed_rank_sum(&observations, policy)?;
        Ok(Self { observations, sr })
    }
}

/// Within-group Wilcoxon signed-rank sum `SR = sum sign(x_j) * rank(|x_j|)`
/// under the strict policy (no zeros, no tied magnitudes).
pub fn bakir_reynolds_sr(group: &[f64]) -> Result<i64> {
    if group.is_empty() {
        return Err(Error::domain("signed-rank group is empty"));
    }
    check_finite(group)?;
    if let Some(i) = group.iter().position(|&x| x == 0.0) {
        return Err(Error::Tie(format!("group element {} is zero", i + 1)));
    }
    let mut order: Vec<usize> = (0..group.len()).collect();
    order.sort_by(|&a, &b| group[a].abs().total_cmp(&group[b].abs()));
    if order
        .windows(2)
        .any(|w| group[w[0]].abs() == group[w[1]].abs())
    {
        return Err(Error::Tie("tied magnitudes within group".into()));
    }
    Ok(order
        .iter()
        .enumerate()
        .map(|(r, &i)| (r as i64 + 1) * if group[i] > 0.0 { 1 } else { -1 })
        .sum())
}

/// Signed-rank sum under either policy; the lenient form uses midranks of
/// tied magnitudes and gives zeros no sign.
pub fn signed_rank_sum(group: &[f64], policy: TiePolicy) -> Result<f64> {
    match policy {
        TiePolicy::Strict => bakir_reynolds_sr(group).map(|v| v as f64),
        TiePolicy::Lenient => {
            if group.is_empty() {
                return Err(Error::domain("signed-rank group is empty"));
            }
            check_finite(group)?;
            let mags: Vec<f64> = group.iter().map(|x| x.abs()).collect();
            let ranks = midranks(&mags);
            Ok(group
                .iter()
                .zip(ranks)
                .map(|(&x, r)| signum0(x) * r)
                .sum())
        }
    }
}

fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::Ingestion(format!(
            "observation {} is not finite ({})",
            i + 1,
            values[i]
        ))),
        None => Ok(()),
    }
}

/// The two one-sided Bakir-Reynolds CUSUM statistics after the last group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BakirReynoldsCusum {
    /// `sum_{i<=n} (SR_i - k) - min_{0<=j<=n} sum_{i<=j} (SR_i - k)`
    pub upper: f64,
    /// `max_{0<=j<=n} sum_{i<=j} (SR_i + k) - sum_{i<=n} (SR_i + k)`
    pub lower: f64,
}

/// Partial-sum form of the Bakir-Reynolds CUSUM, one value per prefix of
/// the stream.
pub fn bakir_reynolds_trace(sr_stream: &[f64], k: f64) -> Result<Vec<BakirReynoldsCusum>> {
    if sr_stream.is_empty() {
        return Err(Error::domain("signed-rank stream is empty"));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::config(format!("k={k} must be non-negative")));
    }
    let (mut up_sum, mut up_min) = (0.0f64, 0.0f64);
    let (mut lo_sum, mut lo_max) = (0.0f64, 0.0f64);
    Ok(sr_stream
        .iter()
        .map(|&sr| {
            up_sum += sr - k;
            up_min = up_min.min(up_sum);
            lo_sum += sr + k;
            lo_max = lo_max.max(lo_sum);
            BakirReynoldsCusum {
                upper: up_sum - up_min,
                lower: lo_max - lo_sum,
            }
        })
        .collect())
}

pub fn bakir_reynolds_cusum(sr_stream: &[f64], k: f64) -> Result<BakirReynoldsCusum> {
    Ok(*bakir_reynolds_trace(sr_stream, k)?
        .last()
        .expect("non-empty stream"))
}

/// McDonald's sequential ranks `R_i = 1 + #{j < i : x_j < x_i}`,
/// `U_i = R_i / (i + 1)`, and CUSUM `T_i = max(0, T_{i-1} + U_i - k)`.
#[derive(Debug, Clone, Default)]
pub struct SequentialRankState {
    history: Vec<f64>,
    sorted: Vec<f64>,
    policy: TiePolicy,
    /// Latest sequential rank (a midrank under the lenient policy).
    pub last_r: f64,
    pub last_u: f64,
    pub t_stat: f64,
}

impl SequentialRankState {
    pub fn new(policy: TiePolicy) -> Self {
        Self {
            policy,
            ..Self::default()
        }
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Accepts `x`, updating `R`, `U` and `T`.
    pub fn step(&mut self, x: f64, k: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::Ingestion(format!(
                "observation {} is not finite ({x})",
                self.history.len() + 1
            )));
        }
        let below = self.sorted.partition_point(|&v| v < x);
        let upto = self.sorted.partition_point(|&v| v <= x);
        let equal = upto - below;
        if equal > 0 && self.policy == TiePolicy::Strict {
            return Err(Error::Tie(format!(
                "observation {} ({x}) ties an earlier observation",
                self.history.len() + 1
            )));
        }
        let i = self.history.len() + 1;
        self.last_r = 1.0 + below as f64 + equal as f64 / 2.0;
        self.last_u = self.last_r / (i as f64 + 1.0);
        self.t_stat = cusum_step(self.t_stat, self.last_u, k);
        self.sorted.insert(upto, x);
        self.history.push(x);
        Ok(())
    }
}

/// Convenience form of [`SequentialRankState::step`].
pub fn mcdonald_step(
    mut state: SequentialRankState,
    x: f64,
    k: f64,
) -> Result<SequentialRankState> {
    state.step(x, k)?;
    Ok(state)
}

/// Running exceedance count `M_t = #{j <= t : x_j > mu}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceedanceState {
    pub mu: f64,
    pub m_t: u64,
    pub t: u64,
}

impl ExceedanceState {
    pub fn new(mu: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::config(format!("mu={mu} must be finite")));
        }
        Ok(Self { mu, m_t: 0, t: 0 })
    }

    /// Uses the reference-sample mean as the in-control mean.
    pub fn from_reference(reference: &[f64]) -> Result<Self> {
        if reference.is_empty() {
            return Err(Error::domain("cannot estimate mu from an empty reference sample"));
        }
        check_finite(reference)?;
        Self::new(reference.iter().sum::<f64>() / reference.len() as f64)
    }

    pub fn update(&mut self, x: f64) -> Result<u64> {
        if !x.is_finite() {
            return Err(Error::Ingestion(format!(
                "observation {} is not finite ({x})",
                self.t + 1
            )));
        }
        self.t += 1;
        self.m_t += (x > self.mu) as u64;
        Ok(self.m_t)
    }
}

pub fn yang_cheng_m(seq: &[f64], mu: f64) -> Result<u64> {
    let mut st = ExceedanceState::new(mu)?;
    for &x in seq {
        st.update(x)?;
    }
    Ok(st.m_t)
}
