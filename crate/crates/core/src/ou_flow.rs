//! Order-flow imbalance dynamics.
//!
//! The imbalance follows a mean-reverting Ornstein-Uhlenbeck process pushed
//! down by the trader's own leakage,
//!
//! ```text
//! dY = -beta * Y dt - phi_t dt + sigma dW
//! ```
//!
//! This module provides the exact Gaussian moments of `Y_t` when the leakage
//! is a deterministic schedule, and a path simulator for arbitrary
//! (state-dependent) leakage.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::adaptive_simpson;

/// Absolute tolerance for the leakage convolution integral.
pub const CONVOLUTION_TOL: f64 = 1e-10;

/// Constants of the order-flow model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Mean-reversion rate per unit of volume-time.
    pub beta: f64,
    /// Flow volatility.
    pub sigma: f64,
    /// Weight of the running informational cost `kappa * Y^2`.
    pub kappa: f64,
    /// Leakage per share sold, `phi(alpha) = eta * alpha`.
    pub eta: f64,
}

impl FlowParams {
    pub fn new(beta: f64, sigma: f64, kappa: f64, eta: f64) -> Result<Self> {
        let p = FlowParams {
            beta,
            sigma,
            kappa,
            eta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Setting used for the strategy comparison table: `beta = 0.05`,
    /// `sigma = 0.14`, `kappa = 10`, `eta = 0.075`.
    pub fn table1() -> Self {
        FlowParams {
            beta: 0.05,
            sigma: 0.14,
            kappa: 10.0,
            eta: 0.075,
        }
    }

    /// Same as [`FlowParams::table1`] but with `eta = 0.05`.
    pub fn weak_leakage() -> Self {
        FlowParams {
            eta: 0.05,
            ..Self::table1()
        }
    }

    /// Checks the parameter domain. A zero `sigma` is accepted as the
    /// noiseless limit.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.beta, self.sigma, self.kappa, self.eta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain(format!("non-finite flow parameters {self:?}")));
        }
        if self.beta <= 0.0 {
            return Err(Error::domain(format!("beta must be positive, got {}", self.beta)));
        }
        if self.sigma < 0.0 || self.kappa < 0.0 || self.eta < 0.0 {
            return Err(Error::domain(format!(
                "sigma, kappa and eta must be non-negative, got {self:?}"
            )));
        }
        let sv = self.stationary_variance();
        if sv > 0.0 && !(0.01..=0.2).contains(&sv) {
            log::warn!("stationary imbalance variance {sv:.4} outside the typical range [0.01, 0.2]");
        }
        Ok(())
    }

    /// `sigma^2 / (2 beta)`.
    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.beta)
    }

    /// Variance of `Y_t` started from a fixed value.
    pub fn variance_at(&self, t: f64) -> f64 {
        self.stationary_variance() * -(-2.0 * self.beta * t).exp_m1()
    }
}

/// A deterministic leakage rate as a function of time.
#[derive(Clone)]
pub enum Schedule {
    Constant(f64),
    /// Rate `rates[k]` on `[knots[k], knots[k + 1])`; the last rate extends
    /// to infinity. `knots[0]` must be 0.
    Piecewise { knots: Vec<f64>, rates: Vec<f64> },
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant(r) => f.debug_tuple("Constant").field(r).finish(),
            Schedule::Piecewise { knots, rates } => f
                .debug_struct("Piecewise")
                .field("knots", knots)
                .field("rates", rates)
                .finish(),
            Schedule::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl Schedule {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Schedule::Function(Arc::new(f))
    }

    pub fn piecewise(knots: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != rates.len() {
            return Err(Error::domain("piecewise schedule needs one rate per knot"));
        }
        if knots[0] != 0.0 || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("knots must start at 0 and increase strictly"));
        }
        if rates.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::domain("leakage rates must be non-negative"));
        }
        Ok(Schedule::Piecewise { knots, rates })
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self {
            Schedule::Constant(r) => *r,
            Schedule::Piecewise { knots, rates } => {
                let k = knots.partition_point(|&s| s <= t).saturating_sub(1);
                rates[k]
            }
            Schedule::Function(f) => f(t),
        }
    }

    /// `int_0^t exp(-beta (t - s)) phi_s ds`.
    pub fn convolution(&self, t: f64, beta: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Schedule::Constant(r) => r * -(-beta * t).exp_m1() / beta,
            Schedule::Piecewise { knots, rates } => {
                let mut acc = 0.0;
                for (k, &a) in knots.iter().enumerate() {
                    if a >= t {
                        break;
                    }
                    let b = knots.get(k + 1).copied().unwrap_or(f64::INFINITY).min(t);
                    // int_a^b e^{-beta (t - s)} ds
                    let w = ((-beta * (t - b)).exp() - (-beta * (t - a)).exp()) / beta;
                    acc += rates[k] * w;
                }
                acc
            }
            Schedule::Function(f) => {
                adaptive_simpson(|s| (-beta * (t - s)).exp() * f(s), 0.0, t, CONVOLUTION_TOL)
            }
        }
    }
}

/// How the trader's selling feeds back into the imbalance.
#[derive(Debug, Clone)]
pub enum LeakageSpec {
    Zero,
    Deterministic(Schedule),
    /// `phi(alpha) = eta * alpha`, which depends on the realised rate.
    Proportional(f64),
}

/// Mean and variance of `Y_t` under deterministic leakage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowMoments {
    pub mu: f64,
    pub sigma2: f64,
}

/// Exact Gaussian moments of the imbalance at time `t` started from `y`.
pub fn moments(t: f64, y: f64, params: &FlowParams, leakage: &LeakageSpec) -> Result<FlowMoments> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    let drift = match leakage {
        LeakageSpec::Zero => 0.0,
        LeakageSpec::Deterministic(s) => s.convolution(t, params.beta),
        LeakageSpec::Proportional(_) => {
            return Err(Error::domain(
                "proportional leakage depends on the trading rate; supply a deterministic schedule",
            ))
        }
    };
    Ok(FlowMoments {
        mu: y * (-params.beta * t).exp() - drift,
        sigma2: params.variance_at(t),
    })
}

/// One step of the exact OU transition followed by an explicit leakage
/// deduction `phi * dt`.
#[derive(Debug, Clone, Copy)]
pub struct OuStepper {
    dt: f64,
    decay: f64,
    noise_sd: f64,
}

impl OuStepper {
    pub fn new(params: &FlowParams, dt: f64) -> Self {
        OuStepper {
            dt,
            decay: (-params.beta * dt).exp(),
            noise_sd: params.variance_at(dt).sqrt(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn step(&self, y: f64, phi: f64, z: f64) -> f64 {
        y * self.decay + self.noise_sd * z - phi * self.dt
    }
}

/// Random stream for one Monte Carlo path. Streams are keyed by
/// `(seed, path)` so a path's draws do not depend on how work is scheduled.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Draws one standard normal.
#[inline]
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// A sampled imbalance path on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl FlowPath {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("paths hold at least the initial value")
    }

    /// Writes `t,Y` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "Y"])?;
        for (t, y) in self.times.iter().zip(&self.values) {
            w.write_record([t.to_string(), y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates `Y` on `[0, horizon]` with step `dt`. The leakage callback
/// receives `(t, Y_t)` and returns the rate `phi` applied over the step.
///
/// The path has `ceil(horizon / dt) + 1` points; the last step is shortened
/// so the path ends exactly at `horizon`.
pub fn simulate_path<L>(
    params: &FlowParams,
    y0: f64,
    mut leakage: L,
    dt: f64,
    horizon: f64,
    seed: u64,
) -> Result<FlowPath>
where
    L: FnMut(f64, f64) -> f64,
{
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::domain(format!(
            "dt and horizon must be positive, got dt = {dt}, horizon = {horizon}"
        )));
    }
    let n = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let full = OuStepper::new(params, dt);
    let mut rng = path_rng(seed, 0);
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let (mut t, mut y) = (0.0, y0);
    times.push(t);
    values.push(y);
    for step in 0..n {
        let phi = leakage(t, y);
        if !phi.is_finite() {
            return Err(Error::Simulation {
                step,
                time: t,
                reason: format!("leakage callback returned {phi}"),
            });
        }
        let h = (horizon - t).min(dt);
        let z = normal(&mut rng);
        y = if (h - dt).abs() < 1e-15 {
            full.step(y, phi, z)
        } else {
            OuStepper::new(params, h).step(y, phi, z)
        };
        t = if step + 1 == n { horizon } else { t + dt };
        times.push(t);
        values.push(y);
    }
    Ok(FlowPath { times, values })
}
