//! Monte Carlo evaluation of execution strategies.
//!
//! A path steps inventory and imbalance forward on a fixed grid `dt`. Each
//! step charges `(alpha^2 + kappa Y^2 + lambda(x)) dt` at the left endpoint
//! and pushes the imbalance down by `eta alpha dt`. When the current rate
//! would overshoot the remaining inventory, a final fractional step of
//! length `x / alpha` sells the rest.
//!
//! Strategies that commit to a horizon `T` keep paying `kappa Y^2` (and any
//! constant inventory risk) until `T`, even if they finish early, and report
//! `T0 = T`. Indefinite-horizon strategies stop all accrual at liquidation.
//!
//! Paths draw from counter-based streams keyed by `(seed, path)`, so every
//! strategy sees the same shocks on the same path index, and results do not
//! depend on the number of threads.

use std::io::Write;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hjb::{solve_indefinite, GridSpec, ValueSurface};
use crate::horizon::{HorizonModel, HorizonResult, RebalanceSchedule, DEFAULT_TOL, HORIZON_FLOOR};
use crate::myopic::{myopic_solve, InventoryRisk};
use crate::numerics::quantile_sorted;
use crate::ou_flow::{normal, path_rng, FlowParams, OuStepper};
use crate::riccati::{solve_riccati, RiccatiCoefficients, DEFAULT_EPSILON, DEFAULT_STEP};

pub const DEFAULT_DT: f64 = 0.01;
pub const MIN_PATHS: usize = 100;
/// Paths are abandoned once they run this many multiples of `x0 / alpha_0`.
pub const GUARD_MULTIPLE: f64 = 100.0;
/// Longest time-to-go the experiments solve the Riccati system for.
pub const RICCATI_T_MAX: f64 = 40.0;

/// Everything a path needs besides the strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: FlowParams,
    pub risk: InventoryRisk,
    pub x0: f64,
    pub y0: f64,
    pub dt: f64,
    /// Charge `kappa Y_{T0}^2` once instead of the running `kappa Y^2`.
    pub terminal_cost: bool,
    /// How often receding strategies recompute `T*`.
    pub rebalance: RebalanceSchedule,
}

impl SimConfig {
    /// The configuration of the six-strategy comparison: constant risk
    /// 0.1, three units of inventory, balanced flow.
    pub fn table1() -> Self {
        SimConfig {
            params: FlowParams::table1(),
            risk: InventoryRisk::Constant(0.1),
            x0: 3.0,
            y0: 0.0,
            dt: DEFAULT_DT,
            terminal_cost: false,
            rebalance: RebalanceSchedule::Continuous { dt: DEFAULT_DT },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.risk.validate()?;
        self.rebalance.validate()?;
        if !(self.x0 > 0.0) || !(self.dt > 0.0) || !self.y0.is_finite() {
            return Err(Error::domain(format!(
                "need x0 > 0, dt > 0 and finite y0, got x0 = {}, dt = {}, y0 = {}",
                self.x0, self.dt, self.y0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum StrategyKind {
    /// Feedback law `alpha*` read off the finite-difference value surface.
    FdFeedback(Arc<ValueSurface>),
    /// Dynamic strategy that re-optimises its horizon on the rebalance
    /// schedule.
    RecedingDynamic(Arc<RiccatiCoefficients>),
    /// Linear liquidation that re-optimises its horizon on the rebalance
    /// schedule.
    RecedingMl,
    /// Dynamic feedback with a fixed horizon.
    StaticDynamic { coef: Arc<RiccatiCoefficients>, horizon: f64 },
    /// Constant rate `x0 / T`.
    StaticMl { horizon: f64 },
    /// Linear liquidation that recomputes its horizon once, at `x0 / 2`.
    TwoStageMl { horizon: f64 },
    /// The myopic closed-form curve for the configured risk (hyperbolic
    /// for quadratic risk) over a fixed horizon.
    Myopic { horizon: f64 },
}

impl StrategyKind {
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::FdFeedback(_) => "fd_feedback",
            StrategyKind::RecedingDynamic(_) => "receding_dynamic",
            StrategyKind::RecedingMl => "receding_ml",
            StrategyKind::StaticDynamic { .. } => "static_dynamic",
            StrategyKind::StaticMl { .. } => "static_ml",
            StrategyKind::TwoStageMl { .. } => "two_stage_ml",
            StrategyKind::Myopic { .. } => "myopic",
        }
    }

    /// The committed horizon of non-adaptive strategies.
    pub fn fixed_horizon(&self) -> Option<f64> {
        match *self {
            StrategyKind::StaticDynamic { horizon, .. }
            | StrategyKind::StaticMl { horizon }
            | StrategyKind::Myopic { horizon } => Some(horizon),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let h = match *self {
            StrategyKind::StaticDynamic { horizon, .. }
            | StrategyKind::StaticMl { horizon }
            | StrategyKind::TwoStageMl { horizon }
            | StrategyKind::Myopic { horizon } => horizon,
            _ => return Ok(()),
        };
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::domain(format!("strategy horizon must be positive, got {h}")));
        }
        Ok(())
    }
}

/// Per-path record of a single run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub inventory: Vec<f64>,
    pub rate: Vec<f64>,
    pub imbalance: Vec<f64>,
    pub cost: Vec<f64>,
    pub t0: f64,
}

impl Trajectory {
    fn push(&mut self, t: f64, x: f64, a: f64, y: f64, j: f64) {
        self.times.push(t);
        self.inventory.push(x);
        self.rate.push(a);
        self.imbalance.push(y);
        self.cost.push(j);
    }

    pub fn total_cost(&self) -> f64 {
        self.cost.last().copied().unwrap_or(0.0)
    }
}

/// Writes `strategy,t,x,alpha,Y,J` rows for several labelled trajectories.
pub fn write_trajectories<W: Write>(out: W, runs: &[(&str, &Trajectory)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "t", "x", "alpha", "Y", "J"])?;
    for (label, tr) in runs {
        for k in 0..tr.times.len() {
            w.write_record([
                label.to_string(),
                tr.times[k].to_string(),
                tr.inventory[k].to_string(),
                tr.rate[k].to_string(),
                tr.imbalance[k].to_string(),
                tr.cost[k].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// What a Monte Carlo run keeps from each path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub cost: f64,
    pub t0: f64,
    /// Imbalance when the position is closed (at `T` for fixed horizons).
    pub y_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostStats {
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q95: f64,
    pub mean_t0: f64,
    pub n_paths: usize,
    pub se: f64,
}

impl CostStats {
    pub fn from_outcomes(outcomes: &[PathOutcome]) -> Result<Self> {
        let n = outcomes.len();
        if n < 2 {
            return Err(Error::domain(format!("need at least two paths, got {n}")));
        }
        let mean = outcomes.iter().map(|o| o.cost).sum::<f64>() / n as f64;
        let var = outcomes.iter().map(|o| (o.cost - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let mut costs: Vec<f64> = outcomes.iter().map(|o| o.cost).collect();
        costs.sort_by(f64::total_cmp);
        let sd = var.sqrt();
        Ok(CostStats {
            mean,
            sd,
            q05: quantile_sorted(&costs, 0.05),
            q95: quantile_sorted(&costs, 0.95),
            mean_t0: outcomes.iter().map(|o| o.t0).sum::<f64>() / n as f64,
            n_paths: n,
            se: sd / (n as f64).sqrt(),
        })
    }
}

/// A strategy with the parts shared by all paths prepared once.
struct Prepared<'a> {
    kind: &'a StrategyKind,
    cfg: &'a SimConfig,
    model: Option<HorizonModel>,
    /// `T*(x0, y0)`, identical for every path.
    first: Option<HorizonResult>,
}

impl<'a> Prepared<'a> {
    fn new(kind: &'a StrategyKind, cfg: &'a SimConfig) -> Result<Self> {
        cfg.validate()?;
        kind.validate()?;
        let model = match kind {
            StrategyKind::RecedingDynamic(coef) => Some(HorizonModel::dynamic(coef.clone())),
            StrategyKind::RecedingMl | StrategyKind::TwoStageMl { .. } => {
                Some(HorizonModel::myopic_ml(cfg.params, cfg.risk))
            }
            _ => None,
        };
        let first = match (kind, &model) {
            (StrategyKind::RecedingDynamic(_) | StrategyKind::RecedingMl, Some(m)) => {
                Some(m.optimal(cfg.x0, cfg.y0, 1.0, DEFAULT_TOL)?)
            }
            _ => None,
        };
        Ok(Prepared { kind, cfg, model, first })
    }

    fn policy(&self) -> Policy<'_> {
        let (schedule, anchor_h) = match *self.kind {
            StrategyKind::TwoStageMl { horizon } => (RebalanceSchedule::InventoryFraction { k: 2 }, horizon),
            _ => (self.cfg.rebalance, self.first.map_or(0.0, |r| r.t_star)),
        };
        Policy {
            prep: self,
            schedule,
            anchor_t: 0.0,
            anchor_h,
            next_time: 0.0,
            next_k: 1,
            started: matches!(self.kind, StrategyKind::TwoStageMl { .. }),
        }
    }
}

struct Policy<'p> {
    prep: &'p Prepared<'p>,
    schedule: RebalanceSchedule,
    anchor_t: f64,
    anchor_h: f64,
    next_time: f64,
    next_k: u32,
    started: bool,
}

impl Policy<'_> {
    fn due(&mut self, t: f64, x: f64) -> bool {
        let x0 = self.prep.cfg.x0;
        match self.schedule {
            RebalanceSchedule::Continuous { dt } => {
                if !self.started || t >= self.next_time - 1e-9 {
                    self.next_time = t + dt;
                    true
                } else {
                    false
                }
            }
            RebalanceSchedule::InventoryFraction { k } => {
                let mut hit = !self.started;
                while self.next_k < k && x <= x0 * (k - self.next_k) as f64 / k as f64 + 1e-12 {
                    self.next_k += 1;
                    hit = true;
                }
                hit
            }
        }
    }

    fn rate(&mut self, t: f64, x: f64, y: f64) -> Result<f64> {
        let cfg = self.prep.cfg;
        match self.prep.kind {
            StrategyKind::FdFeedback(s) => {
                let g = &s.grid;
                s.feedback_rate(x.min(g.x_max()), y.clamp(g.y_lo, g.y_hi))
            }
            StrategyKind::StaticMl { horizon } => Ok(x / (horizon - t).max(HORIZON_FLOOR)),
            StrategyKind::StaticDynamic { coef, horizon } => Ok(coef.rate((horizon - t).max(coef.epsilon), x, y, true)),
            StrategyKind::Myopic { horizon } => {
                let sol = myopic_solve(cfg.risk, x, (horizon - t).max(HORIZON_FLOOR))?;
                Ok(sol.rate(0.0))
            }
            StrategyKind::RecedingDynamic(_) | StrategyKind::RecedingMl | StrategyKind::TwoStageMl { .. } => {
                let model = self.prep.model.as_ref().expect("receding strategies carry a model");
                let fresh = !self.started;
                if self.due(t, x) {
                    let res = match (fresh, self.prep.first) {
                        (true, Some(first)) => first,
                        _ => {
                            let remaining = (self.anchor_h - (t - self.anchor_t)).max(HORIZON_FLOOR);
                            model.optimal_near(x, y, remaining, DEFAULT_TOL)?
                        }
                    };
                    self.anchor_t = t;
                    self.anchor_h = res.t_star;
                    self.started = true;
                }
                let tau = (self.anchor_h - (t - self.anchor_t)).max(HORIZON_FLOOR);
                Ok(model.rate(tau, x, y))
            }
        }
    }
}

fn run_path(prep: &Prepared, rng: &mut ChaCha8Rng, mut rec: Option<&mut Trajectory>) -> Result<PathOutcome> {
    let cfg = prep.cfg;
    let p = &cfg.params;
    let dt = cfg.dt;
    let stepper = OuStepper::new(p, dt);
    let mut policy = prep.policy();
    let (mut t, mut x, mut y, mut cost) = (0.0f64, cfg.x0, cfg.y0, 0.0f64);
    let running_kappa = if cfg.terminal_cost { 0.0 } else { p.kappa };
    let mut guard = f64::INFINITY;
    let mut step = 0usize;
    loop {
        let alpha = policy.rate(t, x, y)?;
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::Simulation {
                step,
                time: t,
                reason: format!("strategy returned rate {alpha}"),
            });
        }
        if step == 0 {
            guard = if alpha > 0.0 {
                GUARD_MULTIPLE * cfg.x0 / alpha
            } else {
                GUARD_MULTIPLE * cfg.x0
            };
        }
        if let Some(r) = rec.as_deref_mut() {
            r.push(t, x, alpha, y, cost);
        }
        let flow = running_kappa * y * y + cfg.risk.cost(x);
        // the relative slack absorbs roundoff in x and t
        if alpha * dt >= x * (1.0 - 1e-9) {
            let h = x / alpha;
            cost += (alpha * alpha + flow) * h;
            y = OuStepper::new(p, h).step(y, p.eta * alpha, normal(rng));
            t += h;
            break;
        }
        cost += (alpha * alpha + flow) * dt;
        y = stepper.step(y, p.eta * alpha, normal(rng));
        x -= alpha * dt;
        t += dt;
        step += 1;
        if t > guard {
            return Err(Error::Simulation {
                step,
                time: t,
                reason: format!("inventory {x} left after {GUARD_MULTIPLE} x0 / alpha_0"),
            });
        }
    }
    if let Some(r) = rec.as_deref_mut() {
        r.push(t, 0.0, 0.0, y, cost);
    }
    let mut t0 = t;
    if let Some(horizon) = prep.kind.fixed_horizon() {
        let idle = cfg.risk.cost(0.0);
        while t < horizon - 1e-12 {
            let h = (horizon - t).min(dt);
            cost += (running_kappa * y * y + idle) * h;
            let z = normal(rng);
            y = if h == dt {
                stepper.step(y, 0.0, z)
            } else {
                OuStepper::new(p, h).step(y, 0.0, z)
            };
            t += h;
            if let Some(r) = rec.as_deref_mut() {
                r.push(t, 0.0, 0.0, y, cost);
            }
        }
        t0 = t0.max(horizon);
    }
    if cfg.terminal_cost {
        cost += p.kappa * y * y;
        if let Some(r) = rec.as_deref_mut() {
            if let Some(last) = r.cost.last_mut() {
                *last = cost;
            }
        }
    }
    if let Some(r) = rec {
        r.t0 = t0;
    }
    Ok(PathOutcome { cost, t0, y_end: y })
}

/// Runs one path with stream `(seed, 0)` and records it.
pub fn run_strategy(kind: &StrategyKind, cfg: &SimConfig, seed: u64) -> Result<Trajectory> {
    let prep = Prepared::new(kind, cfg)?;
    let mut tr = Trajectory::default();
    run_path(&prep, &mut path_rng(seed, 0), Some(&mut tr))?;
    Ok(tr)
}

/// Per-path outcomes for paths `0..n_paths`, in path order.
pub fn simulate_outcomes(kind: &StrategyKind, cfg: &SimConfig, n_paths: usize, seed: u64) -> Result<Vec<PathOutcome>> {
    let prep = Prepared::new(kind, cfg)?;
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| run_path(&prep, &mut path_rng(seed, i), None))
        .collect()
}

/// Summary statistics of `n_paths` common-random-number paths.
pub fn monte_carlo(kind: &StrategyKind, cfg: &SimConfig, n_paths: usize, seed: u64) -> Result<CostStats> {
    if n_paths < MIN_PATHS {
        return Err(Error::domain(format!("need at least {MIN_PATHS} paths, got {n_paths}")));
    }
    CostStats::from_outcomes(&simulate_outcomes(kind, cfg, n_paths, seed)?)
}

/// The solved ingredients of the six-strategy comparison.
#[derive(Debug, Clone)]
pub struct Table1Setup {
    pub surface: Arc<ValueSurface>,
    pub coef: Arc<RiccatiCoefficients>,
    pub t_star_ml: HorizonResult,
    pub t_star_dynamic: HorizonResult,
}

impl Table1Setup {
    pub fn build(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = GridSpec::default_for(cfg.x0, &cfg.params, cfg.risk)?;
        let surface = Arc::new(solve_indefinite(&cfg.params, cfg.risk, grid)?);
        let coef = Arc::new(solve_riccati(
            &cfg.params,
            cfg.risk,
            RICCATI_T_MAX,
            DEFAULT_EPSILON,
            DEFAULT_STEP,
        )?);
        let t_star_ml = HorizonModel::myopic_ml(cfg.params, cfg.risk).optimal(cfg.x0, cfg.y0, 1.0, DEFAULT_TOL)?;
        let t_star_dynamic = HorizonModel::dynamic(coef.clone()).optimal(cfg.x0, cfg.y0, 1.0, DEFAULT_TOL)?;
        Ok(Table1Setup {
            surface,
            coef,
            t_star_ml,
            t_star_dynamic,
        })
    }

    /// The six strategies from cheapest to most expensive in theory.
    pub fn strategies(&self) -> Vec<(&'static str, StrategyKind)> {
        vec![
            ("v", StrategyKind::FdFeedback(self.surface.clone())),
            ("receding_D", StrategyKind::RecedingDynamic(self.coef.clone())),
            ("receding_ML", StrategyKind::RecedingMl),
            (
                "two_stage_ML",
                StrategyKind::TwoStageMl {
                    horizon: self.t_star_ml.t_star,
                },
            ),
            (
                "static_D",
                StrategyKind::StaticDynamic {
                    coef: self.coef.clone(),
                    horizon: self.t_star_dynamic.t_star,
                },
            ),
            (
                "static_ML",
                StrategyKind::StaticMl {
                    horizon: self.t_star_ml.t_star,
                },
            ),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub strategy: String,
    pub stats: CostStats,
}

/// All six strategies on the same `n_paths` paths.
pub fn table1(cfg: &SimConfig, n_paths: usize, seed: u64) -> Result<Vec<Table1Row>> {
    let setup = Table1Setup::build(cfg)?;
    setup
        .strategies()
        .into_iter()
        .map(|(name, kind)| {
            Ok(Table1Row {
                strategy: name.to_string(),
                stats: monte_carlo(&kind, cfg, n_paths, seed)?,
            })
        })
        .collect()
}

/// Writes `strategy,mean,sd,q05,q95,mean_T0`.
pub fn write_table1<W: Write>(out: W, rows: &[Table1Row]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "mean", "sd", "q05", "q95", "mean_T0"])?;
    for r in rows {
        let s = &r.stats;
        w.write_record([
            r.strategy.clone(),
            s.mean.to_string(),
            s.sd.to_string(),
            s.q05.to_string(),
            s.q95.to_string(),
            s.mean_t0.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub kappa: f64,
    pub eta: f64,
    pub y: f64,
    pub rate: f64,
    pub t_star: f64,
}

/// Initial receding dynamic rate at inventory `x` over a grid of
/// informational cost, leakage strength and imbalance.
pub fn comparative_statics(
    params: &FlowParams,
    risk: InventoryRisk,
    x: f64,
    kappas: &[f64],
    etas: &[f64],
    ys: &[f64],
) -> Result<Vec<RateRow>> {
    let mut rows = Vec::with_capacity(kappas.len() * etas.len() * ys.len());
    for &kappa in kappas {
        for &eta in etas {
            let p = FlowParams { kappa, eta, ..*params };
            let coef = Arc::new(solve_riccati(&p, risk, RICCATI_T_MAX, DEFAULT_EPSILON, DEFAULT_STEP)?);
            let model = HorizonModel::dynamic(coef);
            let mut seed = 1.0;
            for &y in ys {
                let (rate, res) = crate::horizon::receding_step(&model, x, y, seed)?;
                seed = res.t_star.max(HORIZON_FLOOR);
                rows.push(RateRow {
                    kappa,
                    eta,
                    y,
                    rate,
                    t_star: res.t_star,
                });
            }
        }
    }
    Ok(rows)
}

/// Writes `kappa,eta,y,rate,t_star`.
pub fn write_rates<W: Write>(out: W, rows: &[RateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Realised horizons of a strategy for one starting imbalance.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSample {
    pub y0: f64,
    pub outcomes: Vec<PathOutcome>,
}

impl HorizonSample {
    pub fn median_t0(&self) -> f64 {
        let mut t: Vec<f64> = self.outcomes.iter().map(|o| o.t0).collect();
        t.sort_by(f64::total_cmp);
        quantile_sorted(&t, 0.5)
    }

    /// Sample correlation of realised cost and realised horizon.
    pub fn cost_horizon_correlation(&self) -> f64 {
        let n = self.outcomes.len() as f64;
        let mc = self.outcomes.iter().map(|o| o.cost).sum::<f64>() / n;
        let mt = self.outcomes.iter().map(|o| o.t0).sum::<f64>() / n;
        let (mut sct, mut scc, mut stt) = (0.0, 0.0, 0.0);
        for o in &self.outcomes {
            let (dc, dt) = (o.cost - mc, o.t0 - mt);
            sct += dc * dt;
            scc += dc * dc;
            stt += dt * dt;
        }
        sct / (scc * stt).sqrt()
    }
}

/// Realised horizons of `kind` for each starting imbalance in `y0s`.
pub fn horizon_distribution(
    kind: &StrategyKind,
    cfg: &SimConfig,
    y0s: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<HorizonSample>> {
    y0s.iter()
        .map(|&y0| {
            let c = SimConfig { y0, ..*cfg };
            Ok(HorizonSample {
                y0,
                outcomes: simulate_outcomes(kind, &c, n_paths, seed)?,
            })
        })
        .collect()
}

/// Writes `y0,bin_lo,bin_hi,count` with `bins` equal bins spanning all
/// samples.
pub fn write_horizon_histogram<W: Write>(out: W, samples: &[HorizonSample], bins: usize) -> Result<()> {
    let bins = bins.max(1);
    let all = samples.iter().flat_map(|s| s.outcomes.iter().map(|o| o.t0));
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(t), b.max(t)));
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["y0", "bin_lo", "bin_hi", "count"])?;
    for s in samples {
        let mut counts = vec![0usize; bins];
        for o in &s.outcomes {
            let b = (((o.t0 - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        for (b, c) in counts.iter().enumerate() {
            w.write_record([
                s.y0.to_string(),
                (lo + b as f64 * width).to_string(),
                (lo + (b + 1) as f64 * width).to_string(),
                c.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `y0,T0,Y_T0` for every path.
pub fn write_horizon_scatter<W: Write>(out: W, samples: &[HorizonSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["y0", "T0", "Y_T0"])?;
    for s in samples {
        for o in &s.outcomes {
            w.write_record([s.y0.to_string(), o.t0.to_string(), o.y_end.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
