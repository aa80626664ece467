use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("simulation failed at step {step} (t = {time}): {reason}")]
    Simulation {
        step: usize,
        time: f64,
        reason: String,
    },

    /// The Riccati integration left the admissible region.
    #[error("riccati solver blew up at tau = {tau}: {reason}")]
    RiccatiBlowUp { tau: f64, reason: String },

    /// Explicit HJB marching hit a negative radicand.
    #[error(
        "negative radicand {radicand:.3e} at grid point (i = {i}, j = {j}) = (x = {x:.4}, y = {y:.4}); \
         widen the imbalance bounds or reduce the inventory step"
    )]
    NegativeRadicand {
        i: usize,
        j: usize,
        x: f64,
        y: f64,
        radicand: f64,
    },

    #[error("horizon search failed: {0}")]
    Search(String),

    #[error("model build failed: {0}")]
    Build(String),

    /// A trade record that cannot be used.
    #[error("bad trade record {index}: {reason}")]
    Data { index: usize, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
