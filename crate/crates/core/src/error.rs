use std::fmt;

use thiserror::Error;

/// Errors raised by the statistics, chart, simulation, and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the statistic is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A measurement could not be accepted (non-finite or unparsable).
    #[error("ingestion error: {0}")]
    Ingestion(String),

    /// Parameters violate a configuration invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// A decision-value table has no entry for the requested key.
    #[error("lookup error: no decision values for {requested}; available: {available}")]
    Lookup { requested: String, available: String },

    /// An operation is not allowed in the chart's current state.
    #[error("state error: {0}")]
    State(String),

    /// Tied observations (or zeros) where the strict tie policy forbids them.
    #[error("tie error: {0}")]
    Tie(String),

    /// Calibration could not continue (too few surviving sequences).
    #[error("calibration aborted: {0}")]
    Calibration(String),

    /// Run-length estimation produced no usable runs.
    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl fmt::Display) -> Self {
        Error::Domain(msg.to_string())
    }

    pub(crate) fn config(msg: impl fmt::Display) -> Self {
        Error::Config(msg.to_string())
    }
}
