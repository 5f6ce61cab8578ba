use log::warn;
use rayon::prelude::*;

use super::scenario::{substream, Dist};
use super::upper_quantile;
use crate::error::{Error, Result};
use crate::rank_core::{mw_counts, SmwScale};

/// `T_l` for `sequences` in-control replications of length `l`, in
/// replication order.
pub fn pettitt_null_statistics(l: usize, sequences: u64, seed: u64, dist: Dist) -> Result<Vec<f64>> {
    if l < 2 {
        return Err(Error::domain(format!("Pettitt statistic needs l >= 2, got {l}")));
    }
    let scale = SmwScale::new(l);
    Ok((0..sequences)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream(seed, rep);
            let v: Vec<f64> = (0..l).map(|_| dist.draw_standard(&mut rng)).collect();
            mw_counts(&v)
                .iter()
                .enumerate()
                .map(|(i, &mw)| scale.smw(i + 1, mw).abs())
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Monte Carlo critical value: empirical `(1 - alpha)` quantile of `T_l`
/// under standard-normal in-control data.
pub fn pettitt_critical(l: usize, alpha: f64, sequences: u64, seed: u64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha={alpha} must lie in (0, 1)")));
    }
    let expected = sequences as f64 * alpha;
    if expected < 10.0 {
        return Err(Error::config(format!(
            "sequences * alpha = {expected:.1} < 10; the tail quantile cannot be estimated"
        )));
    }
    if expected < 100.0 {
        warn!("sequences * alpha = {expected:.1} < 100; Pettitt critical value is noisy");
    }
    let mut stats = pettitt_null_statistics(l, sequences, seed, Dist::Normal)?;
    Ok(upper_quantile(&mut stats, alpha))
}
