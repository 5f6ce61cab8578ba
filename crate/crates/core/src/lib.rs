//! Nonparametric CUSUM control chart built on the standardized
//! Mann-Whitney statistic.
//!
//! * [`rank_core`]: Mann-Whitney / Wilcoxon / Pettitt statistics and an
//!   incremental rank engine.
//! * [`chart_engine`]: the CUSUM path, decision-value tables and the
//!   two-step control rule.
//! * [`baseline_charts`]: comparator statistics from other rank charts.
//! * [`mc_harness`]: simulation, calibration and run-length estimation.
//! * [`cli_io`]: configuration, file formats and the command-line driver.

pub mod baseline_charts;
pub mod chart_engine;
pub mod cli_io;
pub mod error;
pub mod mc_harness;
pub mod rank_core;

pub use error::{Error, Result};
