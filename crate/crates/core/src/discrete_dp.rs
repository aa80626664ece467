//! Execution in volume time with participation-rate controls.
//!
//! Time advances in buckets of `V` shares. In each bucket the trader takes
//! a fraction `alpha` of the volume, so inventory drops by `alpha V`, and
//! the trade displaces other volume from the bucket:
//!
//! ```text
//! Y' = y e^{-beta V} + eps - alpha psi(alpha) (y + 1)
//! ```
//!
//! The imbalance is kept on a grid in `[-1, 1]` (a Markov-chain
//! approximation) and the indefinite-horizon value is reached by value
//! iteration from a terminal cost `H(x) = A x^2`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::myopic::InventoryRisk;
use crate::numerics::normal_cdf;

/// Minimisers within this much of the best value count as ties; ties go to
/// the smallest participation rate.
const TIE_TOL: f64 = 1e-12;

/// Inputs of [`build_model`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpSpec {
    /// Participation rates are `1/N, 2/N, ..., 1`.
    pub n_alpha: usize,
    /// Inventory levels are `0, V/N, ..., (n_x - 1) V / N`.
    pub n_x: usize,
    /// Number of equally spaced imbalance levels on `[-1, 1]`.
    pub n_y: usize,
    pub bucket_volume: f64,
    /// `psi(alpha) = alpha^p`.
    pub psi_exponent: f64,
    /// Decay of the imbalance per unit volume.
    pub beta: f64,
    /// Noise scale per unit volume; the bucket shock has variance
    /// `sigma^2 / (2 beta) (1 - e^{-2 beta V})` before truncation.
    pub sigma: f64,
    pub kappa: f64,
    pub risk: InventoryRisk,
    /// Terminal cost coefficient `A` in `H(x) = A x^2`; `None` uses
    /// `1 / V^2`, the cost of selling everything in one more bucket.
    pub terminal_a: Option<f64>,
}

impl Default for DpSpec {
    /// A 41 x 41 x 20 model with unit buckets.
    fn default() -> Self {
        DpSpec {
            n_alpha: 20,
            n_x: 41,
            n_y: 41,
            bucket_volume: 1.0,
            psi_exponent: 1.0,
            beta: 0.05,
            sigma: 0.14,
            kappa: 10.0,
            risk: InventoryRisk::Constant(0.1),
            terminal_a: None,
        }
    }
}

/// A transition distribution over a contiguous run of imbalance levels.
#[derive(Debug, Clone, PartialEq)]
struct Row {
    start: usize,
    probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpModel {
    pub spec: DpSpec,
    pub x_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub terminal_a: f64,
    // kernel[j * n_alpha + (m - 1)]
    kernel: Vec<Row>,
}

impl DpModel {
    pub fn psi(&self, alpha: f64) -> f64 {
        alpha.powf(self.spec.psi_exponent)
    }

    /// `E[Y']` before discretisation.
    pub fn expected_next(&self, y: f64, alpha: f64) -> f64 {
        let s = &self.spec;
        y * (-s.beta * s.bucket_volume).exp() - alpha * self.psi(alpha) * (y + 1.0)
    }

    /// Transition probabilities from level `j` under rate index `m`
    /// (`alpha = m / N`, `1 <= m <= N`) as `(level, probability)` pairs.
    pub fn transition(&self, j: usize, m: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let row = &self.kernel[j * self.spec.n_alpha + (m - 1)];
        row.probs.iter().enumerate().map(move |(k, &p)| (row.start + k, p))
    }

    /// Mean of the discretised transition.
    pub fn kernel_mean(&self, j: usize, m: usize) -> f64 {
        self.transition(j, m).map(|(l, p)| p * self.y_grid[l]).sum()
    }

    pub fn terminal(&self, x: f64) -> f64 {
        self.terminal_a * x * x
    }
}

/// Validates the inputs and precomputes the transition kernel.
pub fn build_model(spec: DpSpec) -> Result<DpModel> {
    let n = spec.n_alpha;
    if n == 0 || spec.n_x < 2 {
        return Err(Error::Build(format!(
            "need n_alpha >= 1 and n_x >= 2, got {} and {}",
            spec.n_alpha, spec.n_x
        )));
    }
    if spec.n_y < 2 {
        return Err(Error::Build(format!(
            "an imbalance grid of {} level(s) cannot represent the leakage shift",
            spec.n_y
        )));
    }
    if !(spec.bucket_volume > 0.0) || !(spec.beta >= 0.0) || !(spec.sigma >= 0.0) || !(spec.kappa >= 0.0) {
        return Err(Error::Build(
            "bucket volume must be positive; beta, sigma and kappa non-negative".into(),
        ));
    }
    if !(spec.psi_exponent >= 0.0) {
        return Err(Error::Build(format!("psi exponent must be >= 0, got {}", spec.psi_exponent)));
    }
    spec.risk.validate()?;
    let v = spec.bucket_volume;
    let terminal_a = spec.terminal_a.unwrap_or(1.0 / (v * v));
    if !(terminal_a >= 0.0) {
        return Err(Error::Build(format!("terminal coefficient must be >= 0, got {terminal_a}")));
    }
    let x_grid: Vec<f64> = (0..spec.n_x).map(|i| i as f64 * v / n as f64).collect();
    let dy = 2.0 / (spec.n_y - 1) as f64;
    let y_grid: Vec<f64> = (0..spec.n_y).map(|j| -1.0 + j as f64 * dy).collect();
    let alpha_grid: Vec<f64> = (1..=n).map(|m| m as f64 / n as f64).collect();
    let var = if spec.beta > 0.0 {
        spec.sigma * spec.sigma / (2.0 * spec.beta) * -(-2.0 * spec.beta * v).exp_m1()
    } else {
        spec.sigma * spec.sigma * v
    };
    let sd = var.sqrt();
    let mut model = DpModel {
        spec,
        x_grid,
        y_grid,
        alpha_grid,
        terminal_a,
        kernel: Vec::with_capacity(spec.n_y * n),
    };
    for j in 0..spec.n_y {
        for m in 1..=n {
            let alpha = model.alpha_grid[m - 1];
            let shift = alpha * model.psi(alpha) * (model.y_grid[j] + 1.0);
            if shift > 2.0 {
                return Err(Error::Build(format!(
                    "leakage shift {shift} at level {} exceeds the grid span",
                    model.y_grid[j]
                )));
            }
            // with decay the mean can leave [-1, 1] slightly; the truncated
            // shock puts the mass back on the grid
            let mean = model.expected_next(model.y_grid[j], alpha);
            let row = discretise(mean, sd, &model.y_grid, dy);
            model.kernel.push(row);
        }
    }
    Ok(model)
}

// Truncated normal on [-1, 1], each value sent to its nearest level.
fn discretise(mean: f64, sd: f64, levels: &[f64], dy: f64) -> Row {
    let last = levels.len() - 1;
    let nearest = || {
        let l = (((mean + 1.0) / dy).round().max(0.0) as usize).min(last);
        Row {
            start: l,
            probs: vec![1.0],
        }
    };
    if sd == 0.0 {
        return nearest();
    }
    let cdf = |z: f64| normal_cdf((z - mean) / sd);
    let mut probs: Vec<f64> = (0..=last)
        .map(|l| {
            let lo = if l == 0 { -1.0 } else { levels[l] - 0.5 * dy };
            let hi = if l == last { 1.0 } else { levels[l] + 0.5 * dy };
            cdf(hi) - cdf(lo)
        })
        .collect();
    let total: f64 = probs.iter().sum();
    if !(total > 1e-300) {
        return nearest();
    }
    probs.iter_mut().for_each(|p| *p /= total);
    let first = probs.iter().position(|&p| p > 0.0).unwrap_or(0);
    let end = probs.iter().rposition(|&p| p > 0.0).map_or(first + 1, |e| e + 1);
    Row {
        start: first,
        probs: probs[first..end].to_vec(),
    }
}

/// One stage of values and minimising rates, indexed `[i * n_y + j]`.
/// The rate is 0 where the inventory is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub values: Vec<f64>,
    pub policy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    /// Stages `0..=t`, or only the last one for stationary solves.
    pub stages: Vec<Stage>,
    pub n_x: usize,
    pub n_y: usize,
}

impl ValueTable {
    pub fn last(&self) -> &Stage {
        self.stages.last().expect("value tables hold at least one stage")
    }

    #[inline]
    pub fn value(&self, stage: usize, i: usize, j: usize) -> f64 {
        self.stages[stage].values[i * self.n_y + j]
    }

    #[inline]
    pub fn policy(&self, stage: usize, i: usize, j: usize) -> f64 {
        self.stages[stage].policy[i * self.n_y + j]
    }
}

/// The terminal stage `v^{(0)} = H`.
pub fn terminal_stage(model: &DpModel) -> Stage {
    let ny = model.y_grid.len();
    let mut values = Vec::with_capacity(model.x_grid.len() * ny);
    for &x in &model.x_grid {
        values.extend(std::iter::repeat(model.terminal(x)).take(ny));
    }
    Stage {
        policy: vec![0.0; values.len()],
        values,
    }
}

/// The Bellman operator applied to `prev`.
pub fn bellman_update(model: &DpModel, prev: &[f64]) -> Stage {
    let ny = model.y_grid.len();
    let n = model.spec.n_alpha;
    let kappa = model.spec.kappa;
    let cells: Vec<(f64, f64)> = (0..model.x_grid.len() * ny)
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell / ny, cell % ny);
            if i == 0 {
                return (0.0, 0.0);
            }
            let y = model.y_grid[j];
            let running = kappa * y * y + model.spec.risk.cost(model.x_grid[i]);
            let mut best = (f64::INFINITY, 0usize);
            for m in 1..=n.min(i) {
                let alpha = model.alpha_grid[m - 1];
                let next = &prev[(i - m) * ny..(i - m + 1) * ny];
                let cont: f64 = model.transition(j, m).map(|(l, p)| p * next[l]).sum();
                let q = alpha * alpha + running + cont;
                if q < best.0 - TIE_TOL {
                    best = (q, m);
                }
            }
            (best.0, model.alpha_grid[best.1 - 1])
        })
        .collect();
    let (values, policy) = cells.into_iter().unzip();
    Stage { values, policy }
}

/// `t_max` stages of backward induction from the terminal cost.
pub fn value_iteration(model: &DpModel, t_max: usize) -> Result<ValueTable> {
    if t_max == 0 {
        return Err(Error::domain("value iteration needs at least one stage"));
    }
    let mut stages = vec![terminal_stage(model)];
    for _ in 0..t_max {
        let next = bellman_update(model, &stages.last().unwrap().values);
        stages.push(next);
    }
    Ok(ValueTable {
        stages,
        n_x: model.x_grid.len(),
        n_y: model.y_grid.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryResult {
    pub table: ValueTable,
    pub converged: bool,
    pub iterations: usize,
    /// Sup-norm change of the last iteration.
    pub gap: f64,
    /// Sup-norm change at every iteration.
    pub gaps: Vec<f64>,
}

/// Iterates until successive stages differ by less than `tol` in sup norm,
/// or `t_cap` stages.
pub fn stationary_value(model: &DpModel, tol: f64, t_cap: usize) -> Result<StationaryResult> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut cur = terminal_stage(model);
    let mut gaps = Vec::new();
    let mut converged = false;
    while gaps.len() < t_cap {
        let next = bellman_update(model, &cur.values);
        let gap = next
            .values
            .iter()
            .zip(&cur.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        cur = next;
        gaps.push(gap);
        if gap < tol {
            converged = true;
            break;
        }
    }
    Ok(StationaryResult {
        table: ValueTable {
            stages: vec![cur],
            n_x: model.x_grid.len(),
            n_y: model.y_grid.len(),
        },
        converged,
        iterations: gaps.len(),
        gap: gaps.last().copied().unwrap_or(f64::INFINITY),
        gaps,
    })
}

/// Writes `x,y,alpha,v` for one stage.
pub fn write_stage_csv<W: Write>(out: W, model: &DpModel, stage: &Stage) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "alpha", "v"])?;
    let ny = model.y_grid.len();
    for (i, &x) in model.x_grid.iter().enumerate() {
        for (j, &y) in model.y_grid.iter().enumerate() {
            let k = i * ny + j;
            w.write_record([
                x.to_string(),
                y.to_string(),
                stage.policy[k].to_string(),
                stage.values[k].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
