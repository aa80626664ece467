//! Choosing the execution horizon.
//!
//! Every fixed-horizon strategy has an expected cost `u(T, x, y)`. Trading
//! for too short a time pays impact, trading for too long pays
//! informational and timing costs, so `T* = argmin_T u` is finite once `u`
//! eventually increases. `T*` is located by a doubling search for an upper
//! bound followed by a coarse scan and golden-section refinement; the scan
//! guards against the cost not being convex in `T`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::myopic::{information_cost_linear, InventoryRisk};
use crate::numerics::{golden_section, normal_cdf};
use crate::ou_flow::FlowParams;
use crate::riccati::RiccatiCoefficients;

/// Smallest horizon considered; keeps dynamic strategies outside the
/// Riccati boundary layer.
pub const HORIZON_FLOOR: f64 = 1e-3;
pub const DEFAULT_TOL: f64 = 1e-5;
pub const COARSE_POINTS: usize = 64;

/// Log-spaced scan of the toxicity-aware objective.
const ELO_SCAN_POINTS: usize = 400;
const DOUBLING_SAMPLES: usize = 8;
const MAX_DOUBLINGS: u32 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonResult {
    pub t_star: f64,
    pub value_at_star: f64,
    /// Upper end of the searched interval; the cost increases beyond it.
    pub t_bar: f64,
    pub evaluations: usize,
}

/// When a receding-horizon trader recomputes `T*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RebalanceSchedule {
    /// Every `dt` units of (volume) time.
    Continuous { dt: f64 },
    /// Whenever inventory crosses `x0 (K - k) / K`.
    InventoryFraction { k: u32 },
}

impl RebalanceSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RebalanceSchedule::Continuous { dt } if !(dt > 0.0) => {
                Err(Error::domain(format!("rebalance interval must be positive, got {dt}")))
            }
            RebalanceSchedule::InventoryFraction { k: 0 } => {
                Err(Error::domain("inventory-fraction schedule needs K >= 1"))
            }
            _ => Ok(()),
        }
    }
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(f64) -> Result<f64>> Counted<F> {
    fn call(&mut self, t: f64) -> Result<f64> {
        self.evals += 1;
        (self.f)(t)
    }
}

fn t_bar_counted<F: FnMut(f64) -> Result<f64>>(f: &mut Counted<F>, t_seed: f64) -> Result<f64> {
    if !(t_seed > 0.0) || !t_seed.is_finite() {
        return Err(Error::domain(format!("seed horizon must be positive, got {t_seed}")));
    }
    let mut t = t_seed;
    for _ in 0..=MAX_DOUBLINGS {
        let mut prev = f.call(t)?;
        let mut increasing = true;
        for i in 1..DOUBLING_SAMPLES {
            let next = f.call(t * (1.0 + i as f64 / (DOUBLING_SAMPLES - 1) as f64))?;
            if next <= prev {
                increasing = false;
                break;
            }
            prev = next;
        }
        if increasing {
            // the minimum can still sit between T and the first sample
            return Ok(t * (1.0 + 1.0 / (DOUBLING_SAMPLES - 1) as f64));
        }
        t *= 2.0;
    }
    Err(Error::Search(format!(
        "cost still not increasing at T = {:.4e} (seed {t_seed}); check that the informational \
         or timing cost is switched on",
        t
    )))
}

/// Doubling search from `t_seed` for a horizon beyond which the cost
/// increases, judged on 8 samples of `[T, 2T]`.
pub fn find_t_bar<F: FnMut(f64) -> Result<f64>>(value_fn: F, t_seed: f64) -> Result<f64> {
    t_bar_counted(&mut Counted { f: value_fn, evals: 0 }, t_seed)
}

fn scan_then_refine<F: FnMut(f64) -> Result<f64>>(
    f: &mut Counted<F>,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> Result<(f64, f64, bool)> {
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = (0, f64::INFINITY);
    for i in 0..points {
        let v = f.call(lo + i as f64 * step)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let (i, grid_min) = best;
    let interior = i > 0 && i + 1 < points;
    let a = lo + i.saturating_sub(1) as f64 * step;
    let b = lo + (i + 1).min(points - 1) as f64 * step;
    let (x, fx, _) = golden_section(|t| f.call(t), a, b, tol)?;
    if fx <= grid_min {
        Ok((x, fx, interior))
    } else {
        Ok((lo + i as f64 * step, grid_min, interior))
    }
}

/// Minimises `value_fn` over `[HORIZON_FLOOR, t_bar]`: a 64-point scan
/// localises the global minimum, golden-section refines it to `tol`.
pub fn optimize_horizon<F: FnMut(f64) -> Result<f64>>(value_fn: F, t_bar: f64, tol: f64) -> Result<HorizonResult> {
    let mut f = Counted { f: value_fn, evals: 0 };
    optimize_counted(&mut f, t_bar, tol)
}

fn optimize_counted<F: FnMut(f64) -> Result<f64>>(f: &mut Counted<F>, t_bar: f64, tol: f64) -> Result<HorizonResult> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let t_bar = t_bar.max(HORIZON_FLOOR);
    if t_bar <= HORIZON_FLOOR {
        let v = f.call(HORIZON_FLOOR)?;
        return Ok(HorizonResult {
            t_star: HORIZON_FLOOR,
            value_at_star: v,
            t_bar,
            evaluations: f.evals,
        });
    }
    let (t_star, value_at_star, _) = scan_then_refine(f, HORIZON_FLOOR, t_bar, COARSE_POINTS, tol)?;
    Ok(HorizonResult {
        t_star,
        value_at_star,
        t_bar,
        evaluations: f.evals,
    })
}

/// `find_t_bar` followed by `optimize_horizon`.
pub fn search_horizon<F: FnMut(f64) -> Result<f64>>(value_fn: F, t_seed: f64, tol: f64) -> Result<HorizonResult> {
    let mut f = Counted { f: value_fn, evals: 0 };
    let t_bar = t_bar_counted(&mut f, t_seed)?;
    optimize_counted(&mut f, t_bar, tol)
}

/// Fixed-horizon strategy family whose `T*` a receding trader tracks.
#[derive(Debug, Clone)]
pub enum Family {
    /// Linear liquidation, rate `x / T`.
    MyopicMl,
    /// Dynamic feedback from a solved Riccati system (DL or DH).
    Dynamic(Arc<RiccatiCoefficients>),
}

/// A fixed-horizon value function `u(T, x, y)` together with its rate.
#[derive(Debug, Clone)]
pub struct HorizonModel {
    pub family: Family,
    pub params: FlowParams,
    pub risk: InventoryRisk,
}

impl HorizonModel {
    pub fn myopic_ml(params: FlowParams, risk: InventoryRisk) -> Self {
        HorizonModel {
            family: Family::MyopicMl,
            params,
            risk,
        }
    }

    pub fn dynamic(coef: Arc<RiccatiCoefficients>) -> Self {
        HorizonModel {
            params: *coef.params(),
            risk: coef.risk(),
            family: Family::Dynamic(coef),
        }
    }

    /// Expected cost of following the family for exactly `t` more time.
    pub fn value(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        match &self.family {
            Family::MyopicMl => ml_value(self.risk, t, x, y, &self.params),
            Family::Dynamic(coef) => coef.value(t, x, y),
        }
    }

    /// Rate at time-to-go `t`; dynamic rates are clamped at zero.
    pub fn rate(&self, t: f64, x: f64, y: f64) -> f64 {
        match &self.family {
            Family::MyopicMl => x / t,
            Family::Dynamic(coef) => coef.rate(t, x, y, true),
        }
    }

    /// Largest horizon the value function can evaluate.
    pub fn max_horizon(&self) -> f64 {
        match &self.family {
            Family::MyopicMl => f64::INFINITY,
            Family::Dynamic(coef) => coef.t_max(),
        }
    }

    /// `T*(x, y)` by the full search, doubling from `t_seed`.
    pub fn optimal(&self, x: f64, y: f64, t_seed: f64, tol: f64) -> Result<HorizonResult> {
        search_horizon(|t| self.value(t, x, y), t_seed, tol)
    }

    /// `T*(x, y)` searched near a previous optimum `t_prev`.
    ///
    /// Along a simulated path `T*` moves little between steps, so a short
    /// scan of `[t_prev / 2, 2 t_prev]` is tried first. If the minimum sits
    /// on the edge of that bracket the full search runs instead.
    pub fn optimal_near(&self, x: f64, y: f64, t_prev: f64, tol: f64) -> Result<HorizonResult> {
        let lo = (0.5 * t_prev).max(HORIZON_FLOOR);
        let hi = (2.0 * t_prev).min(self.max_horizon());
        if hi > lo {
            let mut f = Counted {
                f: |t: f64| self.value(t, x, y),
                evals: 0,
            };
            let (t_star, value_at_star, interior) = scan_then_refine(&mut f, lo, hi, 16, tol)?;
            if interior {
                return Ok(HorizonResult {
                    t_star,
                    value_at_star,
                    t_bar: hi,
                    evaluations: f.evals,
                });
            }
        }
        self.optimal(x, y, t_prev.max(HORIZON_FLOOR), tol)
    }
}

/// Expected cost of linear liquidation over `t` under any risk form.
pub fn ml_value(risk: InventoryRisk, t: f64, x: f64, y: f64, params: &FlowParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("horizon must be positive, got {t}")));
    }
    let timing = match risk {
        InventoryRisk::Zero => 0.0,
        InventoryRisk::Constant(c) => c * t,
        InventoryRisk::Linear(c) => 0.5 * c * x * t,
        InventoryRisk::Quadratic(c) => c * x * x * t / 3.0,
    };
    let info = if params.kappa == 0.0 {
        0.0
    } else {
        information_cost_linear(t, x, y, params)
    };
    Ok(x * x / t + timing + info)
}

/// One receding-horizon decision: recompute `T*(x, y)` and return the
/// family's rate at that horizon along with the search result.
pub fn receding_step(model: &HorizonModel, x: f64, y: f64, t_seed: f64) -> Result<(f64, HorizonResult)> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("inventory must be positive, got {x}")));
    }
    let res = model.optimal(x, y, t_seed, DEFAULT_TOL)?;
    Ok((model.rate(res.t_star, x, y), res))
}

/// `E|Y_T|` for linear selling of `x` over `t`.
pub fn expected_abs_imbalance(t: f64, x: f64, y: f64, params: &FlowParams) -> f64 {
    let beta = params.beta;
    let mu = y * (-beta * t).exp() + params.eta * x / t * (-beta * t).exp_m1() / beta;
    let sd = params.variance_at(t).sqrt();
    folded_normal_mean(mu, sd)
}

/// Mean of `|Z|` for `Z ~ N(mu, sd^2)`.
pub fn folded_normal_mean(mu: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mu.abs();
    }
    let r = mu / sd;
    sd * (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * r * r).exp() + mu * (1.0 - 2.0 * normal_cdf(-r))
}

/// Static horizon of the toxicity-aware liquidation objective
/// `E|Y_T| + c sqrt(T)` under linear selling.
pub fn elo_static_horizon(x: f64, y: f64, c: f64, params: &FlowParams) -> Result<HorizonResult> {
    if !(x > 0.0) || !(c > 0.0) {
        return Err(Error::domain(format!("need x > 0 and c > 0, got x = {x}, c = {c}")));
    }
    params.validate()?;
    let f = |t: f64| expected_abs_imbalance(t, x, y, params) + c * t.sqrt();
    // The objective can fall, rise and fall again, so doubling is unsafe.
    // It is at least c sqrt(T), so nothing past (f(floor) / c)^2 can win.
    let at_floor = f(HORIZON_FLOOR);
    let t_bar = (at_floor / c).powi(2).max(2.0 * HORIZON_FLOOR);
    let ratio = (t_bar / HORIZON_FLOOR).ln();
    let grid = |k: usize| HORIZON_FLOOR * (ratio * k as f64 / (ELO_SCAN_POINTS - 1) as f64).exp();
    let mut best = (0, at_floor);
    for k in 1..ELO_SCAN_POINTS {
        let v = f(grid(k));
        if v < best.1 {
            best = (k, v);
        }
    }
    let (k, grid_min) = best;
    let (a, b) = (grid(k.saturating_sub(1)), grid((k + 1).min(ELO_SCAN_POINTS - 1)));
    let (t, v, evals) = golden_section::<_, Error>(|t| Ok(f(t)), a, b, DEFAULT_TOL)?;
    let (t_star, value_at_star) = if v <= grid_min { (t, v) } else { (grid(k), grid_min) };
    Ok(HorizonResult {
        t_star,
        value_at_star,
        t_bar,
        evaluations: ELO_SCAN_POINTS + evals,
    })
}
