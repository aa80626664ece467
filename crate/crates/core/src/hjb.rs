//! Indefinite-horizon value function by explicit marching in inventory.
//!
//! Minimising the HJB equation over the rate gives
//!
//! ```text
//! v_x = 2 sqrt(kappa y^2 + lambda(x) - beta y v_y + sigma^2/2 v_yy) - eta v_y
//! ```
//!
//! which is first order in `x`, so with `v(0, y) = 0` the surface can be
//! built row by row. The scheme is explicit: its diffusion number
//! `(sigma^2/2) / sqrt(R) * dx / dy^2` must stay below 1/2, and it fails
//! outright wherever the radicand `R` turns negative.

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::myopic::InventoryRisk;
use crate::ou_flow::FlowParams;

/// Number of stationary standard deviations the imbalance grid must cover.
pub const MIN_WIDTH_SD: f64 = 5.0;
const DEFAULT_NY: usize = 400;
/// Target diffusion number of the default grid. Kept at 0.2 so that one
/// refinement (halving both steps) stays below the stability limit.
const DEFAULT_DIFFUSION_NUMBER: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_x: usize,
    pub dx: f64,
    pub n_y: usize,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl GridSpec {
    pub fn new(n_x: usize, dx: f64, n_y: usize, y_lo: f64, y_hi: f64) -> Result<Self> {
        let g = GridSpec { n_x, dx, n_y, y_lo, y_hi };
        g.validate()?;
        Ok(g)
    }

    /// Default grid covering `[0, x0]`: `y` within five stationary standard
    /// deviations on 400 steps, and `dx = min(1e-3 x0, stable step)`.
    ///
    /// The stable step uses `sqrt(lambda(0))` (or 0.1 if that vanishes) as a
    /// lower bound for the square root in the update.
    pub fn default_for(x0: f64, params: &FlowParams, risk: InventoryRisk) -> Result<Self> {
        if !(x0 > 0.0) {
            return Err(Error::domain(format!("inventory must be positive, got {x0}")));
        }
        let sd = params.stationary_variance().sqrt();
        let half = if sd > 0.0 { MIN_WIDTH_SD * sd } else { 1.0 };
        let dy = 2.0 * half / DEFAULT_NY as f64;
        let diffusion = 0.5 * params.sigma * params.sigma;
        let root = risk.cost(0.0).max(0.01).sqrt();
        let stable = if diffusion > 0.0 {
            DEFAULT_DIFFUSION_NUMBER * dy * dy * root / diffusion
        } else {
            f64::INFINITY
        };
        let mut dx = (1e-3 * x0).min(stable);
        let n_x = (x0 / dx).ceil() as usize;
        dx = x0 / n_x as f64;
        GridSpec::new(n_x, dx, DEFAULT_NY, -half, half)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x == 0 || !(self.dx > 0.0) || !self.dx.is_finite() {
            return Err(Error::domain(format!(
                "need n_x >= 1 and dx > 0, got n_x = {}, dx = {}",
                self.n_x, self.dx
            )));
        }
        if self.n_y < 2 || !(self.y_lo < 0.0 && 0.0 < self.y_hi) {
            return Err(Error::domain(format!(
                "need n_y >= 2 and y_lo < 0 < y_hi, got n_y = {}, [{}, {}]",
                self.n_y, self.y_lo, self.y_hi
            )));
        }
        Ok(())
    }

    pub fn dy(&self) -> f64 {
        (self.y_hi - self.y_lo) / self.n_y as f64
    }

    pub fn x_max(&self) -> f64 {
        self.n_x as f64 * self.dx
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y_lo + j as f64 * self.dy()
    }

    /// Both steps halved, same domain.
    pub fn refined(&self) -> Self {
        GridSpec {
            n_x: 2 * self.n_x,
            dx: 0.5 * self.dx,
            n_y: 2 * self.n_y,
            ..*self
        }
    }
}

/// `v(x_i, y_j)` on the grid, row-major in `i`.
#[derive(Debug)]
pub struct ValueSurface {
    pub grid: GridSpec,
    pub params: FlowParams,
    pub risk: InventoryRisk,
    values: Vec<f64>,
    clamps: AtomicU64,
}

impl Clone for ValueSurface {
    fn clone(&self) -> Self {
        ValueSurface {
            grid: self.grid,
            params: self.params,
            risk: self.risk,
            values: self.values.clone(),
            clamps: AtomicU64::new(self.clamps.load(Ordering::Relaxed)),
        }
    }
}

/// Marches `v` from `v(0, .) = 0` up to `x = n_x dx`.
pub fn solve_indefinite(params: &FlowParams, risk: InventoryRisk, grid: GridSpec) -> Result<ValueSurface> {
    params.validate()?;
    risk.validate()?;
    grid.validate()?;
    let sd = params.stationary_variance().sqrt();
    if grid.y_lo > -MIN_WIDTH_SD * sd || grid.y_hi < MIN_WIDTH_SD * sd {
        return Err(Error::domain(format!(
            "imbalance grid [{}, {}] must cover +-{MIN_WIDTH_SD} stationary sd (+-{:.4})",
            grid.y_lo,
            grid.y_hi,
            MIN_WIDTH_SD * sd
        )));
    }
    let (nx, ny) = (grid.n_x, grid.n_y);
    let m = ny + 1;
    let dy = grid.dy();
    let (kappa, beta, eta) = (params.kappa, params.beta, params.eta);
    let half_s2 = 0.5 * params.sigma * params.sigma;
    let ys: Vec<f64> = (0..m).map(|j| grid.y(j)).collect();
    let mut values = vec![0.0; (nx + 1) * m];
    for i in 0..nx {
        let lambda = risk.cost(grid.x(i));
        let (prev, next) = values[i * m..(i + 2) * m].split_at_mut(m);
        for j in 0..m {
            let (vy, vyy) = if j == 0 {
                ((prev[1] - prev[0]) / dy, 0.0)
            } else if j == ny {
                ((prev[ny] - prev[ny - 1]) / dy, 0.0)
            } else {
                (
                    (prev[j + 1] - prev[j - 1]) / (2.0 * dy),
                    (prev[j + 1] - 2.0 * prev[j] + prev[j - 1]) / (dy * dy),
                )
            };
            let y = ys[j];
            let radicand = kappa * y * y + lambda - beta * y * vy + half_s2 * vyy;
            if radicand < 0.0 || !radicand.is_finite() {
                return Err(Error::NegativeRadicand {
                    i,
                    j,
                    x: grid.x(i),
                    y,
                    radicand,
                });
            }
            next[j] = prev[j] + grid.dx * (2.0 * radicand.sqrt() - eta * vy);
        }
    }
    Ok(ValueSurface {
        grid,
        params: *params,
        risk,
        values,
        clamps: AtomicU64::new(0),
    })
}

impl ValueSurface {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.grid.n_y + 1) + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.grid.n_y + 1;
        &self.values[i * m..(i + 1) * m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check(&self, x: f64, y: f64) -> Result<()> {
        let g = &self.grid;
        let tol = 1e-12 * (1.0 + g.x_max());
        if !(x >= -tol && x <= g.x_max() + tol && y >= g.y_lo - 1e-12 && y <= g.y_hi + 1e-12) {
            return Err(Error::domain(format!(
                "({x}, {y}) outside the grid [0, {}] x [{}, {}]",
                g.x_max(),
                g.y_lo,
                g.y_hi
            )));
        }
        Ok(())
    }

    #[inline]
    fn cell(&self, x: f64, y: f64) -> (usize, usize, f64, f64) {
        let g = &self.grid;
        let px = (x / g.dx).clamp(0.0, g.n_x as f64);
        let py = ((y - g.y_lo) / g.dy()).clamp(0.0, g.n_y as f64);
        let i = (px.floor() as usize).min(g.n_x - 1);
        let j = (py.floor() as usize).min(g.n_y - 1);
        (i, j, px - i as f64, py - j as f64)
    }

    fn bilinear(&self, f: impl Fn(usize, usize) -> f64, i: usize, j: usize, s: f64, t: f64) -> f64 {
        (1.0 - s) * ((1.0 - t) * f(i, j) + t * f(i, j + 1)) + s * ((1.0 - t) * f(i + 1, j) + t * f(i + 1, j + 1))
    }

    /// Bilinear interpolation of `v`.
    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        self.check(x, y)?;
        let (i, j, s, t) = self.cell(x, y);
        Ok(self.bilinear(|a, b| self.at(a, b), i, j, s, t))
    }

    // forward difference in x (the marching update), backward on the last row
    #[inline]
    fn dvdx(&self, i: usize, j: usize) -> f64 {
        let i = i.min(self.grid.n_x - 1);
        (self.at(i + 1, j) - self.at(i, j)) / self.grid.dx
    }

    #[inline]
    fn dvdy(&self, i: usize, j: usize) -> f64 {
        let ny = self.grid.n_y;
        let dy = self.grid.dy();
        if j == 0 {
            (self.at(i, 1) - self.at(i, 0)) / dy
        } else if j == ny {
            (self.at(i, ny) - self.at(i, ny - 1)) / dy
        } else {
            (self.at(i, j + 1) - self.at(i, j - 1)) / (2.0 * dy)
        }
    }

    /// `(v_x + eta v_y) / 2` before clamping.
    pub fn raw_rate(&self, x: f64, y: f64) -> Result<f64> {
        self.check(x, y)?;
        let (i, j, s, t) = self.cell(x, y);
        let vx = self.bilinear(|a, b| self.dvdx(a, b), i, j, s, t);
        let vy = self.bilinear(|a, b| self.dvdy(a, b), i, j, s, t);
        Ok(0.5 * (vx + self.params.eta * vy))
    }

    /// Optimal feedback rate `max(0, (v_x + eta v_y) / 2)`.
    pub fn feedback_rate(&self, x: f64, y: f64) -> Result<f64> {
        let a = self.raw_rate(x, y)?;
        if a < 0.0 {
            self.clamps.fetch_add(1, Ordering::Relaxed);
            Ok(0.0)
        } else {
            Ok(a)
        }
    }

    pub fn clamp_count(&self) -> u64 {
        self.clamps.load(Ordering::Relaxed)
    }

    /// Writes `x,y,v` rows; every `stride`-th node in each direction.
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "v"])?;
        let stride = stride.max(1);
        for i in (0..=self.grid.n_x).step_by(stride) {
            for j in (0..=self.grid.n_y).step_by(stride) {
                w.write_record([
                    self.grid.x(i).to_string(),
                    self.grid.y(j).to_string(),
                    self.at(i, j).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Little-endian dump: `u64 n_x, u64 n_y, f64 dx, f64 dy, f64 y_lo`,
    /// then the `(n_x + 1) (n_y + 1)` values row by row.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.grid.n_x as u64).to_le_bytes())?;
        out.write_all(&(self.grid.n_y as u64).to_le_bytes())?;
        for v in [self.grid.dx, self.grid.dy(), self.grid.y_lo] {
            out.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid(params: &FlowParams) -> GridSpec {
        let half = 5.0 * params.stationary_variance().sqrt();
        GridSpec::new(300, 0.01, 80, -half, half).unwrap()
    }

    #[test]
    fn zero_cost_environment_is_free() {
        let p = FlowParams::new(0.05, 0.14, 0.0, 0.0).unwrap();
        let s = solve_indefinite(&p, InventoryRisk::Zero, small_grid(&p)).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_risk_without_flow_is_two_sqrt_c_x() {
        // u = x^2/T + cT minimised at T = x/sqrt(c): v = 2 sqrt(c) x
        let p = FlowParams::new(0.05, 0.0, 0.0, 0.0).unwrap();
        let g = GridSpec::new(300, 0.01, 10, -1.0, 1.0).unwrap();
        let s = solve_indefinite(&p, InventoryRisk::Constant(0.1), g).unwrap();
        let v = s.value(3.0, 0.0).unwrap();
        assert!((v - 2.0 * 0.1f64.sqrt() * 3.0).abs() < 1e-12);
        assert!((s.feedback_rate(1.5, 0.3).unwrap() - 0.1f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn first_row_is_zero_and_rows_increase() {
        let p = FlowParams::table1();
        let s = solve_indefinite(&p, InventoryRisk::Constant(0.1), small_grid(&p)).unwrap();
        assert!(s.row(0).iter().all(|&v| v == 0.0));
        for i in 0..s.grid.n_x {
            for j in 0..=s.grid.n_y {
                assert!(s.at(i + 1, j) > s.at(i, j));
            }
        }
    }

    #[test]
    fn narrow_grid_rejected() {
        let p = FlowParams::table1();
        let g = GridSpec::new(10, 0.01, 10, -0.5, 0.5).unwrap();
        assert!(solve_indefinite(&p, InventoryRisk::Constant(0.1), g).is_err());
    }

    #[test]
    fn negative_radicand_names_grid_point() {
        // no inventory risk: row 1 is 2 dx sqrt(kappa) |y| and the mean
        // reversion term -beta y v_y beats kappa y^2 next to y = 0
        let p = FlowParams::new(0.05, 0.01, 1.0, 0.0).unwrap();
        let half = 5.0 * p.stationary_variance().sqrt();
        let g = GridSpec::new(50, 0.5, 20, -half, half).unwrap();
        match solve_indefinite(&p, InventoryRisk::Zero, g) {
            Err(Error::NegativeRadicand { i, y, radicand, .. }) => {
                assert_eq!(i, 1);
                assert!(y != 0.0 && y.abs() < 2.0 * 0.05 * 0.5, "y = {y}");
                assert!(radicand < 0.0);
            }
            other => panic!("expected a radicand failure, got {other:?}"),
        }
    }

    #[test]
    fn out_of_grid_query_errors() {
        let p = FlowParams::table1();
        let s = solve_indefinite(&p, InventoryRisk::Constant(0.1), small_grid(&p)).unwrap();
        assert!(s.value(3.5, 0.0).is_err());
        assert!(s.feedback_rate(1.0, 10.0).is_err());
    }

    #[test]
    fn binary_dump_layout() {
        let p = FlowParams::table1();
        let s = solve_indefinite(&p, InventoryRisk::Constant(0.1), small_grid(&p)).unwrap();
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 24 + 8 * 301 * 81);
        assert_eq!(u64::from_le_bytes(buf[0..8].try_into().unwrap()), 300);
        let last = f64::from_le_bytes(buf[buf.len() - 8..].try_into().unwrap());
        assert_eq!(last, s.at(300, 80));
    }
}
