//! Monte Carlo machinery: change-point sequence generation, sequential
//! calibration of decision values, run-length estimation and Pettitt
//! critical values.
//!
//! Every replication draws from its own ChaCha stream selected by
//! `(seed, replication)`, and results are gathered in replication order
//! before any reduction, so output does not depend on the worker count.

mod arl;
mod calibration;
mod pettitt;
mod scenario;

pub use arl::{estimate_arl, ArlReport, RunLengthConvention};
pub use calibration::{calibrate, standard_n_grid, CalibrationOutcome, CalibrationSpec};
pub use pettitt::{pettitt_critical, pettitt_null_statistics};
pub use scenario::{generate_sequence, substream, Dist, ScenarioStream, ShiftScenario};

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool
/// when `workers` is `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::config("workers must be at least 1")),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// 1-based index `ceil((1 - alpha) * len)` of the empirical `(1 - alpha)` quantile.
pub(crate) fn upper_quantile_rank(len: usize, alpha: f64) -> usize {
    // ceil((1-a)N) = N - floor(aN); the nudge absorbs rounding in a*N.
    let drop = (alpha * len as f64 + 1e-9).floor() as usize;
    len.saturating_sub(drop).clamp(1, len.max(1))
}

/// Empirical `(1 - alpha)` quantile as an order statistic (no smoothing).
/// `values` is reordered.
pub(crate) fn upper_quantile(values: &mut [f64], alpha: f64) -> f64 {
    let c = upper_quantile_rank(values.len(), alpha);
    let (_, v, _) = values.select_nth_unstable_by(c - 1, f64::total_cmp);
    *v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_rank() {
        assert_eq!(upper_quantile_rank(200_000, 0.005), 199_000);
        assert_eq!(upper_quantile_rank(1000, 0.0027), 998);
        assert_eq!(upper_quantile_rank(3, 0.5), 2);
        assert_eq!(upper_quantile_rank(10, 0.999), 1);
        let mut v: Vec<f64> = (1..=100).rev().map(f64::from).collect();
        assert_eq!(upper_quantile(&mut v, 0.05), 95.0);
        let mut v = vec![3.0, 1.0, 2.0];
        assert_eq!(upper_quantile(&mut v, 0.5), 2.0);
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(with_workers(Some(0), || ()).is_err());
        assert_eq!(with_workers(Some(2), || 7).unwrap(), 7);
    }
}
