//! Myopic execution strategies.
//!
//! A myopic trader ignores the footprint of its own selling on the order
//! flow, so the optimal inventory curve solves a deterministic
//! calculus-of-variations problem that only sees instantaneous impact
//! `alpha^2` and inventory risk `lambda(x)`. The expected informational cost
//! of the resulting deterministic leakage `phi_t = eta * alpha_t` is then
//! added on top.
//!
//! Three curve families arise:
//!
//! * `Ml`: linear liquidation (VWAP) for `lambda = 0` or `lambda = c`,
//! * `Mh`: hyperbolic-sine liquidation for `lambda(x) = c x^2`,
//! * `Mq`: quadratic liquidation for `lambda(x) = c x`, which may finish
//!   before the deadline at `t_hat = min(T, 2 sqrt(x / c))`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::adaptive_simpson;
use crate::ou_flow::FlowParams;

/// Tolerance of the quadrature used for the informational cost.
pub const COST_QUAD_TOL: f64 = 1e-10;

/// Below this gap between `sqrt(c)` and `beta` the hyperbolic leakage
/// profile switches to its degenerate closed form.
pub const DEGENERATE_GAP: f64 = 1e-9;

/// Running inventory risk `lambda(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "c", rename_all = "lowercase")]
pub enum InventoryRisk {
    Zero,
    /// `c * x^2`
    Quadratic(f64),
    /// `c * x`
    Linear(f64),
    /// `c`, i.e. a cost proportional to time in the market.
    Constant(f64),
}

impl InventoryRisk {
    pub fn coefficient(&self) -> f64 {
        match *self {
            InventoryRisk::Zero => 0.0,
            InventoryRisk::Quadratic(c) | InventoryRisk::Linear(c) | InventoryRisk::Constant(c) => c,
        }
    }

    #[inline]
    pub fn cost(&self, x: f64) -> f64 {
        match *self {
            InventoryRisk::Zero => 0.0,
            InventoryRisk::Quadratic(c) => c * x * x,
            InventoryRisk::Linear(c) => c * x,
            InventoryRisk::Constant(c) => c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.coefficient();
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::domain(format!("risk coefficient must be finite and >= 0, got {c}")));
        }
        Ok(())
    }
}

/// Which closed-form curve a myopic strategy follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MyopicKind {
    /// Linear curve, constant rate `x / T`.
    Ml,
    /// Hyperbolic-sine curve.
    Mh,
    /// Quadratic curve with possible early finish.
    Mq,
}

impl MyopicKind {
    pub fn label(&self) -> &'static str {
        match self {
            MyopicKind::Ml => "ML",
            MyopicKind::Mh => "MH",
            MyopicKind::Mq => "MQ",
        }
    }
}

/// Leakage schedule used when pricing the informational cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeakageKind {
    /// No footprint on the flow.
    None,
    Myopic(MyopicKind),
}

/// A solved myopic strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MyopicSolution {
    pub kind: MyopicKind,
    pub x: f64,
    pub horizon: f64,
    /// Risk coefficient `c` (zero for the linear curve without risk).
    pub c: f64,
    /// Time at which the inventory reaches zero.
    pub effective_horizon: f64,
    /// `int_0^T (alpha_t^2 + lambda(x_t)) dt` along the optimal curve.
    pub impact_cost: f64,
}

/// Solves the deterministic liquidation problem for `x` shares over `horizon`.
pub fn myopic_solve(risk: InventoryRisk, x: f64, horizon: f64) -> Result<MyopicSolution> {
    risk.validate()?;
    if !(x > 0.0) || !(horizon > 0.0) {
        return Err(Error::domain(format!(
            "inventory and horizon must be positive, got x = {x}, T = {horizon}"
        )));
    }
    let sol = match risk {
        InventoryRisk::Zero | InventoryRisk::Quadratic(0.0) => MyopicSolution {
            kind: MyopicKind::Ml,
            x,
            horizon,
            c: 0.0,
            effective_horizon: horizon,
            impact_cost: x * x / horizon,
        },
        InventoryRisk::Constant(c) => MyopicSolution {
            kind: MyopicKind::Ml,
            x,
            horizon,
            c,
            effective_horizon: horizon,
            impact_cost: x * x / horizon + c * horizon,
        },
        InventoryRisk::Quadratic(c) => {
            let r = c.sqrt();
            MyopicSolution {
                kind: MyopicKind::Mh,
                x,
                horizon,
                c,
                effective_horizon: horizon,
                impact_cost: r * x * x / (r * horizon).tanh(),
            }
        }
        InventoryRisk::Linear(c) => {
            let t_hat = if c > 0.0 {
                horizon.min(2.0 * (x / c).sqrt())
            } else {
                horizon
            };
            MyopicSolution {
                kind: MyopicKind::Mq,
                x,
                horizon,
                c,
                effective_horizon: t_hat,
                impact_cost: -c * c * t_hat.powi(3) / 48.0 + 0.5 * c * t_hat * x + x * x / t_hat,
            }
        }
    };
    Ok(sol)
}

impl MyopicSolution {
    /// Inventory `x_t`.
    pub fn inventory(&self, t: f64) -> f64 {
        let (x, big_t) = (self.x, self.horizon);
        let t = t.clamp(0.0, big_t);
        match self.kind {
            MyopicKind::Ml => x * (big_t - t) / big_t,
            MyopicKind::Mh => {
                let r = self.c.sqrt();
                x * (r * (big_t - t)).sinh() / (r * big_t).sinh()
            }
            MyopicKind::Mq => {
                let th = self.effective_horizon;
                if t >= th {
                    0.0
                } else {
                    let c = self.c;
                    (c * t * t / 4.0 - t * (c * th / 4.0 + x / th) + x).max(0.0)
                }
            }
        }
    }

    /// Selling rate `alpha_t = -dx_t/dt`.
    pub fn rate(&self, t: f64) -> f64 {
        let (x, big_t) = (self.x, self.horizon);
        if t < 0.0 || t > big_t {
            return 0.0;
        }
        match self.kind {
            MyopicKind::Ml => x / big_t,
            MyopicKind::Mh => {
                let r = self.c.sqrt();
                r * x * (r * (big_t - t)).cosh() / (r * big_t).sinh()
            }
            MyopicKind::Mq => {
                let th = self.effective_horizon;
                if t >= th {
                    0.0
                } else {
                    (self.c * th / 4.0 + x / th - self.c * t / 2.0).max(0.0)
                }
            }
        }
    }

    /// Convolved leakage `A_t = int_0^t exp(-beta (t - s)) eta alpha_s ds`.
    pub fn leakage_profile(&self, t: f64, params: &FlowParams) -> f64 {
        leakage_profile(self.kind, t, self.x, self.horizon, self.c, params)
    }

    /// Samples `(t, x_t, alpha_t)` on `n + 1` evenly spaced times in `[0, T]`.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64, f64)> {
        let n = n.max(1);
        (0..=n)
            .map(|k| {
                let t = self.horizon * k as f64 / n as f64;
                (t, self.inventory(t), self.rate(t))
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W, n: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x_t", "alpha_t"])?;
        for (t, x, a) in self.sample(n) {
            w.write_record([t.to_string(), x.to_string(), a.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Closed-form `A_t` for the leakage `eta * alpha_t` of a myopic curve.
///
/// After the curve has finished (`t` past `T` or `t_hat`) the profile
/// decays at rate `beta`.
pub fn leakage_profile(kind: MyopicKind, t: f64, x: f64, horizon: f64, c: f64, params: &FlowParams) -> f64 {
    let (beta, eta) = (params.beta, params.eta);
    if t <= 0.0 || eta == 0.0 || x == 0.0 {
        return 0.0;
    }
    let end = match kind {
        MyopicKind::Mq if c > 0.0 => horizon.min(2.0 * (x / c).sqrt()),
        _ => horizon,
    };
    if t > end {
        let at_end = leakage_profile(kind, end, x, horizon, c, params);
        return at_end * (-beta * (t - end)).exp();
    }
    // 1 - e^{-beta t}
    let em = -(-beta * t).exp_m1();
    let a = match kind {
        MyopicKind::Ml => eta * x / (beta * horizon) * em,
        MyopicKind::Mq => {
            let level = c * end / 4.0 + x / end;
            eta * (level * em / beta - 0.5 * c * (beta * t - em) / (beta * beta))
        }
        MyopicKind::Mh => {
            if c == 0.0 {
                return eta * x / (beta * horizon) * em;
            }
            let r = c.sqrt();
            let scale = eta * r * x / (r * horizon).sinh();
            let integral = if (r - beta).abs() < DEGENERATE_GAP {
                // r == beta
                0.5 * t * (beta * (horizon - t)).exp()
                    + (-beta * (horizon + t)).exp() * (2.0 * beta * t).exp_m1() / (4.0 * beta)
            } else {
                let tau = horizon - t;
                (beta * (r * tau).cosh() + r * (r * tau).sinh()
                    - (-beta * t).exp() * (beta * (r * horizon).cosh() + r * (r * horizon).sinh()))
                    / (beta * beta - c)
            };
            scale * integral
        }
    };
    a.max(0.0)
}

/// `kappa * int_0^T (y e^{-beta t})^2 + sigma_t^2 dt`, the cost of sitting
/// in the market without any footprint.
pub fn information_cost_zero(horizon: f64, y: f64, params: &FlowParams) -> f64 {
    let (beta, kappa, sigma) = (params.beta, params.kappa, params.sigma);
    let bt2 = 2.0 * beta * horizon;
    // 2 beta T + e^{-2 beta T} - 1
    let growth = (-bt2).exp_m1() + bt2;
    kappa * y * y / (2.0 * beta) * -(-bt2).exp_m1() + kappa * sigma * sigma / (4.0 * beta * beta) * growth
}

/// Closed form for the linear (VWAP) leakage `phi_t = eta x / T`.
pub fn information_cost_linear(horizon: f64, x: f64, y: f64, params: &FlowParams) -> f64 {
    let (beta, kappa, eta) = (params.beta, params.kappa, params.eta);
    let bt = beta * horizon;
    let e1 = (-bt).exp();
    let e2 = (-2.0 * bt).exp();
    // 2 e^{-bT} - 1 - e^{-2bT} = -(1 - e^{-bT})^2
    let cross = -(-bt).exp_m1().powi(2);
    let quad = 2.0 * bt + 4.0 * e1 - e2 - 3.0;
    information_cost_zero(horizon, y, params)
        + kappa * eta * x * y / (beta * beta * horizon) * cross
        + kappa * eta * eta * x * x / (2.0 * beta.powi(3) * horizon * horizon) * quad
}

/// `kappa * int_0^T (y e^{-beta t} - A_t)^2 + sigma_t^2 dt` by adaptive
/// quadrature, for an arbitrary leakage profile `A_t`.
///
/// `kinks` lists interior points where the profile is not smooth.
pub fn information_cost_quadrature<A>(profile: A, horizon: f64, y: f64, params: &FlowParams, kinks: &[f64]) -> f64
where
    A: Fn(f64) -> f64,
{
    let integrand = |t: f64| {
        let m = y * (-params.beta * t).exp() - profile(t);
        m * m + params.variance_at(t)
    };
    let mut pts = vec![0.0];
    pts.extend(kinks.iter().copied().filter(|&k| k > 0.0 && k < horizon));
    pts.push(horizon);
    let total: f64 = pts
        .windows(2)
        .map(|w| adaptive_simpson(integrand, w[0], w[1], COST_QUAD_TOL / pts.len() as f64))
        .sum();
    params.kappa * total
}

/// Expected informational cost `O(T, x, y)` of a deterministic leakage
/// schedule.
pub fn information_cost(
    kind: LeakageKind,
    horizon: f64,
    x: f64,
    y: f64,
    c: f64,
    params: &FlowParams,
) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
    }
    if params.kappa == 0.0 {
        return Ok(0.0);
    }
    let o = match kind {
        LeakageKind::None => information_cost_zero(horizon, y, params),
        LeakageKind::Myopic(_) if params.eta == 0.0 || x == 0.0 => information_cost_zero(horizon, y, params),
        LeakageKind::Myopic(MyopicKind::Ml) => information_cost_linear(horizon, x, y, params),
        LeakageKind::Myopic(k) => {
            let kinks = match k {
                MyopicKind::Mq if c > 0.0 => vec![2.0 * (x / c).sqrt()],
                _ => vec![],
            };
            information_cost_quadrature(|t| leakage_profile(k, t, x, horizon, c, params), horizon, y, params, &kinks)
        }
    };
    Ok(o)
}

fn leakage_for(sol: &MyopicSolution, params: &FlowParams) -> LeakageKind {
    if params.eta == 0.0 {
        LeakageKind::None
    } else {
        LeakageKind::Myopic(sol.kind)
    }
}

/// Expected total cost `u^M(T, x, y) = I(T, x) + O(T, x, y)` of the myopic
/// strategy matching `risk`.
pub fn myopic_value(risk: InventoryRisk, horizon: f64, x: f64, y: f64, params: &FlowParams) -> Result<f64> {
    if x == 0.0 {
        if !(horizon > 0.0) {
            return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
        }
        let timing = match risk {
            InventoryRisk::Constant(c) => c * horizon,
            _ => 0.0,
        };
        return Ok(timing + information_cost(LeakageKind::None, horizon, 0.0, y, 0.0, params)?);
    }
    let sol = myopic_solve(risk, x, horizon)?;
    let o = information_cost(leakage_for(&sol, params), horizon, x, y, sol.c, params)?;
    Ok(sol.impact_cost + o)
}

/// Initial imbalance minimising `u^M(T, x, .)`.
///
/// `u^M` is quadratic in `y` with coefficients `kappa int e^{-2 beta t}` and
/// `-2 kappa int e^{-beta t} A_t`, so the minimiser is their ratio.
pub fn optimal_initial_imbalance(risk: InventoryRisk, horizon: f64, x: f64, params: &FlowParams) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
    }
    if x == 0.0 || params.eta == 0.0 {
        return Ok(0.0);
    }
    let sol = myopic_solve(risk, x, horizon)?;
    let beta = params.beta;
    let denom = -(-2.0 * beta * horizon).exp_m1() / (2.0 * beta);
    let numer = match sol.kind {
        MyopicKind::Ml => {
            params.eta * x / (beta * horizon) * (-(beta * horizon)).exp_m1().powi(2) / (2.0 * beta)
        }
        kind => {
            let kinks = [sol.effective_horizon];
            let f = |t: f64| (-beta * t).exp() * leakage_profile(kind, t, x, horizon, sol.c, params);
            let mut pts = vec![0.0];
            pts.extend(kinks.iter().copied().filter(|&k| k > 0.0 && k < horizon));
            pts.push(horizon);
            pts.windows(2)
                .map(|w| adaptive_simpson(f, w[0], w[1], COST_QUAD_TOL))
                .sum()
        }
    };
    Ok((numer / denom).max(0.0))
}
