use log::warn;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::scenario::{substream, Dist};
use super::upper_quantile;
use crate::chart_engine::{s_max_from_counts, ChartConfig, DecisionValueTable, Side};
use crate::error::{Error, Result};
use crate::rank_core::{RankEngine, SmwScale};

/// The standard irregular `n` grid: dense early, sparse later.
pub fn standard_n_grid() -> Vec<usize> {
    let mut grid: Vec<usize> = (1..=19).step_by(2).collect();
    grid.extend([22, 26, 30, 35, 40]);
    grid.extend((50..=90).step_by(10));
    grid.extend([115, 140, 165, 190, 240, 290, 390, 490]);
    grid
}

/// Settings for sequential calibration of `h(m, n; alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSpec {
    pub m: usize,
    pub m0: usize,
    pub k: f64,
    pub side: Side,
    pub alphas: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub sequences: u64,
    /// Total sequence length, reference sample included.
    pub length: usize,
    pub seed: u64,
    pub dist: Dist,
    /// Calibration aborts when fewer sequences than this survive.
    pub min_survivors: u64,
    /// A warning is issued when `alpha * survivors` drops below this.
    pub warn_expected_exceedances: f64,
}

impl CalibrationSpec {
    /// Desk-scale defaults: 2e5 sequences of length 250 on the standard grid.
    pub fn new(m: usize, alphas: Vec<f64>, seed: u64) -> Self {
        let length = 250;
        Self {
            m,
            m0: crate::chart_engine::DEFAULT_M0,
            k: crate::chart_engine::DEFAULT_K,
            side: Side::default(),
            alphas,
            n_grid: standard_n_grid()
                .into_iter()
                .filter(|&n| n + m <= length)
                .collect(),
            sequences: 200_000,
            length,
            seed,
            dist: Dist::Normal,
            min_survivors: 1000,
            warn_expected_exceedances: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::config("at least one alpha is required"));
        }
        for &alpha in &self.alphas {
            ChartConfig::new(self.m, self.m0, self.k, alpha, self.side)?;
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(Error::config("n_grid must be non-empty with n >= 1"));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("n_grid must be strictly increasing"));
        }
        let max_n = *self.n_grid.last().expect("non-empty");
        if self.length < self.m + max_n {
            return Err(Error::config(format!(
                "length={} is shorter than m + max(n_grid) = {}",
                self.length,
                self.m + max_n
            )));
        }
        if self.sequences == 0 {
            return Err(Error::config("sequences must be at least 1"));
        }
        Ok(())
    }
}

/// A calibrated table plus diagnostics.
#[derive(Debug, Clone)]
pub struct CalibrationOutcome {
    pub table: DecisionValueTable,
    /// Per alpha, `(n, survivors entering step n)` for every step.
    pub survivors: Vec<(f64, Vec<(usize, u64)>)>,
    pub warnings: Vec<String>,
}

struct Trajectory {
    engine: RankEngine,
    rng: ChaCha8Rng,
    s_max: f64,
    // bit a set while the sequence survives for alphas[a]
    alive: u64,
}

/// Sequential calibration: at each step `n` the decision value is the
/// empirical `(1 - alpha)` quantile of `S_max(m, n)` among sequences that
/// have not yet signaled, and sequences reaching it are removed. This solves
/// `P(S_max(m,n) > h_n | no earlier signal) = alpha` by simulation.
pub fn calibrate(spec: &CalibrationSpec) -> Result<CalibrationOutcome> {
    spec.validate()?;
    if spec.alphas.len() > 64 {
        return Err(Error::config("at most 64 alphas per calibration run"));
    }
    let cfg = ChartConfig::new(spec.m, spec.m0, spec.k, spec.alphas[0], spec.side)?;
    let max_n = *spec.n_grid.last().expect("validated");
    let cap = spec.m + max_n;
    let all_alive = if spec.alphas.len() == 64 {
        u64::MAX
    } else {
        (1u64 << spec.alphas.len()) - 1
    };

    let mut pool: Vec<Trajectory> = (0..spec.sequences)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream(spec.seed, rep);
            let mut engine = RankEngine::with_capacity(cap);
            for _ in 0..spec.m {
                engine.push_finite(spec.dist.draw_standard(&mut rng));
            }
            Trajectory {
                engine,
                rng,
                s_max: 0.0,
                alive: all_alive,
            }
        })
        .collect();

    let mut points: Vec<Vec<(usize, f64)>> = vec![Vec::new(); spec.alphas.len()];
    let mut curves: Vec<Vec<(usize, u64)>> = vec![Vec::new(); spec.alphas.len()];
    let mut warnings = Vec::new();
    let mut grid = spec.n_grid.iter().peekable();
    let mut buf = Vec::with_capacity(pool.len());

    for n in 1..=max_n {
        let scale = SmwScale::new(spec.m + n);
        pool.par_iter_mut().for_each(|tr| {
            let x = spec.dist.draw_standard(&mut tr.rng);
            tr.engine.push_finite(x);
            tr.s_max = s_max_from_counts(tr.engine.counts(), &scale, &cfg);
        });
        let on_grid = grid.next_if_eq(&&n).is_some();

        for (a, &alpha) in spec.alphas.iter().enumerate() {
            let bit = 1u64 << a;
            buf.clear();
            buf.extend(pool.iter().filter(|t| t.alive & bit != 0).map(|t| t.s_max));
            let survivors = buf.len() as u64;
            curves[a].push((n, survivors));
            if survivors < spec.min_survivors {
                return Err(Error::Calibration(format!(
                    "alpha={alpha}: only {survivors} sequences survive at n={n} \
                     (floor {}); increase `sequences`",
                    spec.min_survivors
                )));
            }
            if alpha * (survivors as f64) < spec.warn_expected_exceedances {
                let msg = format!(
                    "alpha={alpha}, n={n}: {survivors} survivors give about {:.0} \
                     exceedances, quantile estimate is noisy",
                    alpha * survivors as f64
                );
                warn!("{msg}");
                warnings.push(msg);
            }
            let h = upper_quantile(&mut buf, alpha);
            if on_grid {
                points[a].push((n, h));
            }
            for t in pool.iter_mut().filter(|t| t.alive & bit != 0) {
                if t.s_max >= h {
                    t.alive &= !bit;
                }
            }
        }
        pool.retain(|t| t.alive != 0);
    }

    let mut table = DecisionValueTable::new();
    for (a, &alpha) in spec.alphas.iter().enumerate() {
        // A zero quantile (possible only when alpha is large) is not a usable
        // decision value.
        if let Some(&(n, h)) = points[a].iter().find(|p| p.1 <= 0.0) {
            return Err(Error::Calibration(format!(
                "alpha={alpha}: decision value at n={n} is {h}; alpha too large for this chart"
            )));
        }
        table.insert_series(spec.m, spec.m0, alpha, &points[a], spec.sequences, spec.seed)?;
    }
    Ok(CalibrationOutcome {
        table,
        survivors: spec.alphas.iter().copied().zip(curves).collect(),
        warnings,
    })
}
