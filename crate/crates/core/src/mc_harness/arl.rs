use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::scenario::ShiftScenario;
use crate::chart_engine::{ChartConfig, ChartState, DecisionValueTable, Status};
use crate::error::{Error, Result};

/// How a run is turned into a run length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunLengthConvention {
    /// Steps from the change-point to the signal, over runs without a signal
    /// at or before `tau`; those runs are discarded and counted.
    #[default]
    ConditionalDelay,
    /// On a signal at or before `tau` the chart restarts from the reference
    /// sample and monitoring continues on the same stream; run length is
    /// still measured from `tau`.
    DelayWithRestart,
    /// Steps from the first future observation to the first signal.
    FromStart,
}

impl fmt::Display for RunLengthConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunLengthConvention::ConditionalDelay => "conditional-delay",
            RunLengthConvention::DelayWithRestart => "delay-with-restart",
            RunLengthConvention::FromStart => "from-start",
        })
    }
}

impl FromStr for RunLengthConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conditional-delay" => Ok(Self::ConditionalDelay),
            "delay-with-restart" => Ok(Self::DelayWithRestart),
            "from-start" => Ok(Self::FromStart),
            other => Err(Error::config(format!(
                "unknown run-length convention `{other}` \
                 (conditional-delay, delay-with-restart, from-start)"
            ))),
        }
    }
}

/// Estimated run-length summary for one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArlReport {
    pub scenario: ShiftScenario,
    pub convention: RunLengthConvention,
    pub arl: f64,
    pub stderr: f64,
    /// Runs that reached `max_n` without a (qualifying) signal. They enter
    /// the mean with their truncated length.
    pub censored: u64,
    /// Signals at or before `tau`.
    pub false_alarms: u64,
    /// Runs contributing to `arl`.
    pub runs: u64,
}

impl ArlReport {
    /// Normal-approximation confidence interval `arl +/- z * stderr`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.arl - z * self.stderr, self.arl + z * self.stderr)
    }
}

#[derive(Debug, Clone, Copy)]
struct RunOutcome {
    // None when the run is discarded
    length: Option<u64>,
    censored: bool,
    false_alarms: u64,
}

fn run_once(
    scn: &ShiftScenario,
    cfg: &ChartConfig,
    h: &[f64],
    convention: RunLengthConvention,
    rep: u64,
) -> Result<RunOutcome> {
    let mut stream = scn.stream(rep);
    let reference = stream.take_vec(scn.m);
    let mut chart = ChartState::new(&reference, *cfg)?;
    let mut false_alarms = 0;
    // steps since the latest (re)start, and absolute future time
    let mut local = 0usize;
    for time in 1..=scn.max_n {
        let verdict = chart.step_with_h(stream.next_value(), h[local])?;
        local += 1;
        if verdict.status == Status::InControl {
            continue;
        }
        match convention {
            RunLengthConvention::FromStart => {
                return Ok(RunOutcome {
                    length: Some(time as u64),
                    censored: false,
                    false_alarms,
                })
            }
            _ if time > scn.tau => {
                return Ok(RunOutcome {
                    length: Some((time - scn.tau) as u64),
                    censored: false,
                    false_alarms,
                })
            }
            RunLengthConvention::ConditionalDelay => {
                return Ok(RunOutcome {
                    length: None,
                    censored: false,
                    false_alarms: 1,
                })
            }
            RunLengthConvention::DelayWithRestart => {
                false_alarms += 1;
                chart = ChartState::new(&reference, *cfg)?;
                local = 0;
            }
        }
    }
    let truncated = match convention {
        RunLengthConvention::FromStart => scn.max_n,
        _ => scn.max_n - scn.tau,
    };
    Ok(RunOutcome {
        length: Some(truncated as u64),
        censored: true,
        false_alarms,
    })
}

/// Simulates `scn.replications` monitoring runs against `table` and
/// summarizes their run lengths.
pub fn estimate_arl(
    scn: &ShiftScenario,
    table: &DecisionValueTable,
    cfg: &ChartConfig,
    convention: RunLengthConvention,
) -> Result<ArlReport> {
    scn.validate()?;
    cfg.validate()?;
    if scn.m != cfg.m {
        return Err(Error::config(format!(
            "scenario has m={} but chart is configured for m={}",
            scn.m, cfg.m
        )));
    }
    let h = (1..=scn.max_n)
        .map(|n| table.lookup_h(cfg.m, cfg.m0, cfg.alpha, n))
        .collect::<Result<Vec<f64>>>()?;

    let outcomes = (0..scn.replications)
        .into_par_iter()
        .map(|rep| run_once(scn, cfg, &h, convention, rep))
        .collect::<Result<Vec<RunOutcome>>>()?;

    let censored = outcomes.iter().filter(|o| o.censored).count() as u64;
    let false_alarms = outcomes.iter().map(|o| o.false_alarms).sum();
    let lengths: Vec<f64> = outcomes.iter().filter_map(|o| o.length.map(|l| l as f64)).collect();
    if lengths.is_empty() {
        return Err(Error::Estimation(format!(
            "all {} runs signaled before the change-point tau={}; nothing to average",
            scn.replications, scn.tau
        )));
    }
    if censored == lengths.len() as u64 {
        return Err(Error::Estimation(format!(
            "all {} runs were censored at max_n={}; raise max_n",
            censored, scn.max_n
        )));
    }
    let count = lengths.len() as f64;
    let arl = lengths.iter().sum::<f64>() / count;
    let stderr = if lengths.len() > 1 {
        let var = lengths.iter().map(|l| (l - arl).powi(2)).sum::<f64>() / (count - 1.0);
        (var / count).sqrt()
    } else {
        0.0
    };
    Ok(ArlReport {
        scenario: *scn,
        convention,
        arl,
        stderr,
        censored,
        false_alarms,
        runs: lengths.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_table(h: f64) -> DecisionValueTable {
        let mut t = DecisionValueTable::new();
        t.insert_series(10, 4, 0.005, &[(1, h)], 1, 0).unwrap();
        t
    }

    #[test]
    fn tiny_threshold_signals_immediately() {
        let cfg = ChartConfig::standard(10, 0.005).unwrap();
        let scn = ShiftScenario::in_control(10, 50, 200, 3).with_shift(0, 5.0);
        let r = estimate_arl(&scn, &flat_table(1e-12), &cfg, RunLengthConvention::default())
            .unwrap();
        assert_eq!(r.censored, 0);
        assert!(r.arl >= 1.0);
        assert!(r.arl < 3.0, "arl {}", r.arl);
    }

    #[test]
    fn all_censored_is_an_error() {
        let cfg = ChartConfig::standard(10, 0.005).unwrap();
        let scn = ShiftScenario::in_control(10, 5, 20, 3);
        let err = estimate_arl(&scn, &flat_table(1e9), &cfg, RunLengthConvention::FromStart)
            .unwrap_err();
        assert!(matches!(err, Error::Estimation(ref m) if m.contains("max_n")));
    }

    #[test]
    fn conventions_on_false_alarms() {
        let cfg = ChartConfig::standard(10, 0.005).unwrap();
        // With a near-zero threshold, any positive S_max signals.
        let scn = ShiftScenario::in_control(10, 60, 100, 8).with_shift(20, 4.0);
        let table = flat_table(1e-12);
        let cond =
            estimate_arl(&scn, &table, &cfg, RunLengthConvention::ConditionalDelay).unwrap();
        let restart =
            estimate_arl(&scn, &table, &cfg, RunLengthConvention::DelayWithRestart).unwrap();
        let start = estimate_arl(&scn, &table, &cfg, RunLengthConvention::FromStart).unwrap();
        assert_eq!(cond.runs + cond.false_alarms, 100);
        assert_eq!(restart.runs, 100);
        assert!(restart.false_alarms >= cond.false_alarms);
        assert_eq!(start.false_alarms, 0);
        assert_eq!(start.runs, 100);
    }

    #[test]
    fn mismatched_configuration() {
        let cfg = ChartConfig::standard(12, 0.005).unwrap();
        let scn = ShiftScenario::in_control(10, 5, 20, 3);
        assert!(estimate_arl(&scn, &flat_table(1.0), &cfg, Default::default()).is_err());
        let cfg = ChartConfig::standard(10, 0.01).unwrap();
        assert!(matches!(
            estimate_arl(&scn, &flat_table(1.0), &cfg, Default::default()),
            Err(Error::Lookup { .. })
        ));
    }

    #[test]
    fn parse_convention() {
        for c in [
            RunLengthConvention::ConditionalDelay,
            RunLengthConvention::DelayWithRestart,
            RunLengthConvention::FromStart,
        ] {
            assert_eq!(c.to_string().parse::<RunLengthConvention>().unwrap(), c);
        }
        assert!("delay".parse::<RunLengthConvention>().is_err());
    }
}
