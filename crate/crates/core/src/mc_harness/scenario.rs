use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::rank_core::ObservationSequence;

/// In-control distribution family, parameterized by location (mean) and
/// scale (standard deviation).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Dist {
    #[default]
    Normal,
    /// Shifted exponential with the requested mean and standard deviation.
    Exponential,
    /// Student-t rescaled to unit variance; needs `df > 2`.
    StudentT { df: f64 },
}

impl Dist {
    fn validate(&self) -> Result<()> {
        match *self {
            Dist::StudentT { df } if !(df > 2.0 && df.is_finite()) => Err(Error::config(
                format!("student-t needs df > 2 for a finite variance (got {df})"),
            )),
            _ => Ok(()),
        }
    }

    /// A zero-mean, unit-variance draw.
    #[inline]
    pub fn draw_standard(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Dist::Normal => StandardNormal.sample(rng),
            Dist::Exponential => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
            Dist::StudentT { df } => {
                let t = StudentT::new(df).expect("validated df").sample(rng);
                t * ((df - 2.0) / df).sqrt()
            }
        }
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dist::Normal => f.write_str("normal"),
            Dist::Exponential => f.write_str("exponential"),
            Dist::StudentT { df } => write!(f, "student-t:{df}"),
        }
    }
}

impl FromStr for Dist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let d = match s {
            "normal" => Dist::Normal,
            "exponential" => Dist::Exponential,
            other => match other.strip_prefix("student-t:") {
                Some(df) => Dist::StudentT {
                    df: df
                        .parse()
                        .map_err(|_| Error::config(format!("bad student-t df `{df}`")))?,
                },
                None => {
                    return Err(Error::config(format!(
                        "unsupported distribution `{other}` (normal, exponential, student-t:<df>)"
                    )))
                }
            },
        };
        d.validate()?;
        Ok(d)
    }
}

/// Independent random stream for replication `rep`, a pure function of `(seed, rep)`.
pub fn substream(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// A change-point simulation: `m` in-control reference draws, then future
/// draws that shift by `delta * sigma` after the first `tau` of them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftScenario {
    pub dist: Dist,
    pub mu0: f64,
    pub sigma: f64,
    pub tau: usize,
    pub delta: f64,
    pub m: usize,
    pub max_n: usize,
    pub replications: u64,
    pub seed: u64,
}

impl ShiftScenario {
    /// Standard-normal in-control data, no shift.
    pub fn in_control(m: usize, max_n: usize, replications: u64, seed: u64) -> Self {
        Self {
            dist: Dist::Normal,
            mu0: 0.0,
            sigma: 1.0,
            tau: 0,
            delta: 0.0,
            m,
            max_n,
            replications,
            seed,
        }
    }

    pub fn with_shift(mut self, tau: usize, delta: f64) -> Self {
        self.tau = tau;
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config(format!("sigma={} must be positive", self.sigma)));
        }
        if !self.mu0.is_finite() || !self.delta.is_finite() {
            return Err(Error::config("mu0 and delta must be finite"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        if self.max_n == 0 {
            return Err(Error::config("max_n must be at least 1"));
        }
        if self.tau > self.max_n {
            return Err(Error::config(format!(
                "tau={} exceeds max_n={}",
                self.tau, self.max_n
            )));
        }
        Ok(())
    }

    /// Observation stream of replication `rep`.
    pub fn stream(&self, rep: u64) -> ScenarioStream {
        ScenarioStream {
            scn: *self,
            rng: substream(self.seed, rep),
            drawn: 0,
        }
    }
}

/// Lazily drawn observations of one replication, reference sample first.
/// Any prefix equals the same prefix of [`generate_sequence`].
pub struct ScenarioStream {
    scn: ShiftScenario,
    rng: ChaCha8Rng,
    drawn: usize,
}

impl ScenarioStream {
    #[inline]
    pub fn next_value(&mut self) -> f64 {
        self.drawn += 1;
        let z = self.scn.dist.draw_standard(&mut self.rng);
        let shift = if self.drawn > self.scn.m + self.scn.tau {
            self.scn.delta
        } else {
            0.0
        };
        self.scn.mu0 + self.scn.sigma * (z + shift)
    }

    pub fn take_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.next_value()).collect()
    }
}

/// The full `m + max_n` sequence of replication `rep`.
pub fn generate_sequence(scn: &ShiftScenario, rep: u64) -> Result<ObservationSequence> {
    scn.validate()?;
    if rep >= scn.replications {
        return Err(Error::domain(format!(
            "replication {rep} out of range (replications = {})",
            scn.replications
        )));
    }
    ObservationSequence::new(scn.stream(rep).take_vec(scn.m + scn.max_n), scn.m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinism_per_replication() {
        let scn = ShiftScenario::in_control(10, 40, 5, 99).with_shift(3, 1.0);
        let a = generate_sequence(&scn, 2).unwrap();
        let b = generate_sequence(&scn, 2).unwrap();
        let c = generate_sequence(&scn, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(generate_sequence(&scn, 5).is_err());
        let prefix = scn.stream(2).take_vec(17);
        assert_eq!(&a.values()[..17], &prefix[..]);
    }

    #[test]
    fn shift_starts_after_tau() {
        // Same draws with and without the shift differ exactly by delta*sigma
        // after position m + tau.
        let base = ShiftScenario {
            sigma: 2.0,
            mu0: 1.0,
            ..ShiftScenario::in_control(10, 20, 1, 5)
        };
        let shifted = base.with_shift(4, 1.5);
        let a = generate_sequence(&base, 0).unwrap();
        let b = generate_sequence(&shifted, 0).unwrap();
        for (i, (x, y)) in a.values().iter().zip(b.values()).enumerate() {
            if i < 14 {
                assert_eq!(x, y);
            } else {
                assert!((y - x - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn future_mean_tracks_delta() {
        let scn = ShiftScenario::in_control(10, 1, 10_000, 17).with_shift(0, 1.0);
        let xs: Vec<f64> = (0..scn.replications)
            .map(|r| generate_sequence(&scn, r).unwrap().future()[0])
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let se = (var / xs.len() as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn distributions_are_standardized() {
        for dist in [
            Dist::Normal,
            Dist::Exponential,
            Dist::StudentT { df: 8.0 },
        ] {
            let mut rng = substream(1, 0);
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| dist.draw_standard(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 0.02, "{dist}: mean {mean}");
            assert!((var - 1.0).abs() < 0.05, "{dist}: var {var}");
        }
    }

    #[test]
    fn parse_dist() {
        assert_eq!("normal".parse::<Dist>().unwrap(), Dist::Normal);
        assert_eq!(
            "student-t:5".parse::<Dist>().unwrap(),
            Dist::StudentT { df: 5.0 }
        );
        assert!("cauchy".parse::<Dist>().is_err());
        assert!("student-t:2".parse::<Dist>().is_err());
    }

    #[test]
    fn scenario_validation() {
        let ok = ShiftScenario::in_control(10, 50, 10, 0);
        assert!(ok.validate().is_ok());
        assert!(ShiftScenario { sigma: 0.0, ..ok }.validate().is_err());
        assert!(ShiftScenario { replications: 0, ..ok }.validate().is_err());
        assert!(ok.with_shift(51, 1.0).validate().is_err());
    }
}
