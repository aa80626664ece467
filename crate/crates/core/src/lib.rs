pub mod discrete_dp;
pub mod error;
pub mod flow_metrics;
pub mod hjb;
pub mod horizon;
pub mod myopic;
pub mod numerics;
pub mod ou_flow;
pub mod riccati;
pub mod simulation;

pub use error::{Error, Result};
