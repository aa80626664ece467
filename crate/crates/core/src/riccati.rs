//! Fixed-horizon dynamic strategies from the linear-quadratic ansatz
//!
//! ```text
//! u(T, x, y) = x^2 A(T) + y^2 B(T) + x y C(T) + F(T)
//! ```
//!
//! where `T` is the time remaining. The coefficients solve a coupled Riccati
//! system integrated from a small boundary layer `tau = eps`, where the
//! singular terminal condition `A -> +inf` is replaced by its short-time
//! expansion.

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::myopic::InventoryRisk;
use crate::numerics::{hermite, hermite_slope};
use crate::ou_flow::FlowParams;

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_STEP: f64 = 1e-4;

/// Which inventory-risk variant the system was solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiccatiVariant {
    /// `lambda(x) = c x^2`; `c` enters the `A` equation.
    Dh,
    /// `lambda(x) = c`; `c` enters the `F` equation.
    Dl,
}

/// Coefficients at one time-to-go.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub f: f64,
}

impl Coefficients {
    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        x * x * self.a + y * y * self.b + x * y * self.c + self.f
    }
}

#[derive(Debug, Clone, Copy)]
struct System {
    beta: f64,
    sigma2: f64,
    kappa: f64,
    eta: f64,
    c_quadratic: f64,
    c_constant: f64,
}

impl System {
    #[inline]
    fn rhs(&self, s: [f64; 4]) -> [f64; 4] {
        let [a, b, c, _] = s;
        let eta = self.eta;
        [
            -a * a - eta * a * c - 0.25 * eta * eta * c * c + self.c_quadratic,
            -eta * eta * b * b - b * (eta * c + 2.0 * self.beta) + self.kappa - 0.25 * c * c,
            -0.5 * eta * c * c - c * (eta * eta * b + a + self.beta) - 2.0 * eta * a * b,
            self.sigma2 * b + self.c_constant,
        ]
    }

    fn rk4(&self, s: [f64; 4], h: f64) -> [f64; 4] {
        let add = |u: [f64; 4], k: [f64; 4], w: f64| {
            [u[0] + w * k[0], u[1] + w * k[1], u[2] + w * k[2], u[3] + w * k[3]]
        };
        let k1 = self.rhs(s);
        let k2 = self.rhs(add(s, k1, 0.5 * h));
        let k3 = self.rhs(add(s, k2, 0.5 * h));
        let k4 = self.rhs(add(s, k3, h));
        let mut out = s;
        for i in 0..4 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }
}

/// Riccati coefficients sampled on a uniform time-to-go grid.
///
/// Between nodes the coefficients are interpolated by cubic Hermite
/// polynomials whose slopes come from the ODE right-hand side.
#[derive(Debug)]
pub struct RiccatiCoefficients {
    pub variant: RiccatiVariant,
    pub epsilon: f64,
    pub step: f64,
    params: FlowParams,
    risk_c: f64,
    // values then slopes, per node
    nodes: Vec<[f64; 8]>,
    clamps: AtomicU64,
}

impl Clone for RiccatiCoefficients {
    fn clone(&self) -> Self {
        RiccatiCoefficients {
            variant: self.variant,
            epsilon: self.epsilon,
            step: self.step,
            params: self.params,
            risk_c: self.risk_c,
            nodes: self.nodes.clone(),
            clamps: AtomicU64::new(self.clamps.load(Ordering::Relaxed)),
        }
    }
}

/// Integrates the Riccati system from `tau = epsilon` to at least `t_max`
/// with fixed-step RK4.
pub fn solve_riccati(
    params: &FlowParams,
    risk: InventoryRisk,
    t_max: f64,
    epsilon: f64,
    step: f64,
) -> Result<RiccatiCoefficients> {
    params.validate()?;
    risk.validate()?;
    let (variant, c_quadratic, c_constant) = match risk {
        InventoryRisk::Zero => (RiccatiVariant::Dh, 0.0, 0.0),
        InventoryRisk::Quadratic(c) => (RiccatiVariant::Dh, c, 0.0),
        InventoryRisk::Constant(c) => (RiccatiVariant::Dl, 0.0, c),
        InventoryRisk::Linear(_) => {
            return Err(Error::domain(
                "linear inventory risk has no sign-constrained Riccati solution",
            ))
        }
    };
    if !(epsilon > 0.0 && epsilon < t_max) {
        return Err(Error::domain(format!(
            "need 0 < epsilon < t_max, got epsilon = {epsilon}, t_max = {t_max}"
        )));
    }
    if !(step > 0.0) || step > epsilon / 10.0 * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "integrator step must be in (0, epsilon / 10], got {step}"
        )));
    }
    let sys = System {
        beta: params.beta,
        sigma2: params.sigma * params.sigma,
        kappa: params.kappa,
        eta: params.eta,
        c_quadratic,
        c_constant,
    };
    let (kappa, eta) = (params.kappa, params.eta);
    let mut s = [
        1.0 / epsilon,
        kappa * epsilon,
        -eta * kappa * epsilon,
        0.5 * sys.sigma2 * kappa * epsilon * epsilon + c_constant * epsilon,
    ];
    let n = ((t_max - epsilon) / step - 1e-9).ceil() as usize;
    let limit = 1.0 / (epsilon * epsilon);
    let mut nodes = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let tau = epsilon + k as f64 * step;
        if s.iter().any(|v| !v.is_finite()) || s[0].abs() > limit {
            return Err(Error::RiccatiBlowUp {
                tau,
                reason: format!("state {s:?}"),
            });
        }
        let d = sys.rhs(s);
        nodes.push([s[0], s[1], s[2], s[3], d[0], d[1], d[2], d[3]]);
        if k < n {
            s = sys.rk4(s, step);
        }
    }
    Ok(RiccatiCoefficients {
        variant,
        epsilon,
        step,
        params: *params,
        risk_c: risk.coefficient(),
        nodes,
        clamps: AtomicU64::new(0),
    })
}

impl RiccatiCoefficients {
    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    pub fn risk(&self) -> InventoryRisk {
        match self.variant {
            RiccatiVariant::Dh => InventoryRisk::Quadratic(self.risk_c),
            RiccatiVariant::Dl => InventoryRisk::Constant(self.risk_c),
        }
    }

    /// Largest time-to-go covered by the grid.
    pub fn t_max(&self) -> f64 {
        self.epsilon + (self.nodes.len() - 1) as f64 * self.step
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Grid node `k` as `(tau, A, B, C, F)`.
    pub fn node(&self, k: usize) -> (f64, Coefficients) {
        let n = &self.nodes[k];
        (
            self.epsilon + k as f64 * self.step,
            Coefficients {
                a: n[0],
                b: n[1],
                c: n[2],
                f: n[3],
            },
        )
    }

    fn contains(&self, tau: f64) -> bool {
        tau >= self.epsilon * (1.0 - 1e-12) && tau <= self.t_max() * (1.0 + 1e-12)
    }

    #[inline]
    fn locate(&self, tau: f64) -> (usize, f64) {
        let pos = ((tau - self.epsilon) / self.step).max(0.0);
        let last = self.nodes.len() - 1;
        let k = (pos.floor() as usize).min(last.saturating_sub(1));
        (k, (pos - k as f64).clamp(0.0, 1.0))
    }

    #[inline]
    fn interp(&self, tau: f64) -> Coefficients {
        if self.nodes.len() == 1 {
            return self.node(0).1;
        }
        let (k, s) = self.locate(tau);
        let (n0, n1) = (&self.nodes[k], &self.nodes[k + 1]);
        let h = self.step;
        Coefficients {
            a: hermite(s, h, n0[0], n1[0], n0[4], n1[4]),
            b: hermite(s, h, n0[1], n1[1], n0[5], n1[5]),
            c: hermite(s, h, n0[2], n1[2], n0[6], n1[6]),
            f: hermite(s, h, n0[3], n1[3], n0[7], n1[7]),
        }
    }

    /// Interpolated coefficients at time-to-go `tau`.
    pub fn at(&self, tau: f64) -> Result<Coefficients> {
        if !self.contains(tau) {
            return Err(Error::domain(format!(
                "time-to-go {tau} outside the solved range [{}, {}]",
                self.epsilon,
                self.t_max()
            )));
        }
        Ok(self.interp(tau))
    }

    /// Derivatives of the interpolant with respect to time-to-go.
    pub fn slopes_at(&self, tau: f64) -> Result<Coefficients> {
        self.at(tau)?;
        let (k, s) = self.locate(tau);
        let (n0, n1) = (&self.nodes[k], &self.nodes[k + 1]);
        let h = self.step;
        Ok(Coefficients {
            a: hermite_slope(s, h, n0[0], n1[0], n0[4], n1[4]),
            b: hermite_slope(s, h, n0[1], n1[1], n0[5], n1[5]),
            c: hermite_slope(s, h, n0[2], n1[2], n0[6], n1[6]),
            f: hermite_slope(s, h, n0[3], n1[3], n0[7], n1[7]),
        })
    }

    /// Expected cost `u^D(T, x, y)` of the dynamic strategy with `T` left.
    pub fn value(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        Ok(self.at(t)?.value(x, y))
    }

    /// Unclamped feedback rate `[x (2A + eta C) + y (C + 2 eta B)] / 2`.
    /// `tau` is clamped into the solved range.
    #[inline]
    pub fn raw_rate(&self, tau: f64, x: f64, y: f64) -> f64 {
        let k = self.interp(tau.clamp(self.epsilon, self.t_max()));
        let eta = self.params.eta;
        0.5 * (x * (2.0 * k.a + eta * k.c) + y * (k.c + 2.0 * eta * k.b))
    }

    /// Selling rate `alpha^D(tau, x, y)`. With `clamp`, negative rates are
    /// replaced by zero and counted.
    pub fn rate(&self, tau: f64, x: f64, y: f64, clamp: bool) -> f64 {
        let a = self.raw_rate(tau, x, y);
        if clamp && a < 0.0 {
            self.clamps.fetch_add(1, Ordering::Relaxed);
            0.0
        } else {
            a
        }
    }

    /// Number of clamped rate evaluations so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamps.load(Ordering::Relaxed)
    }

    /// Absolute residual of the HJB equation for the polynomial ansatz at
    /// `(T, x, y)`.
    ///
    /// The spatial derivatives are exact for the quadratic form; the
    /// coefficient derivatives in `T` are five-point finite differences of
    /// the interpolated grid (one-sided near the ends).
    pub fn pde_residual(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        let k = self.at(t)?;
        let h = self.step;
        let g = |tau: f64| self.interp(tau);
        let d = if t - 2.0 * h >= self.epsilon && t + 2.0 * h <= self.t_max() {
            let (m2, m1, p1, p2) = (g(t - 2.0 * h), g(t - h), g(t + h), g(t + 2.0 * h));
            let fd = |a: f64, b: f64, c: f64, e: f64| (a - 8.0 * b + 8.0 * c - e) / (12.0 * h);
            Coefficients {
                a: fd(m2.a, m1.a, p1.a, p2.a),
                b: fd(m2.b, m1.b, p1.b, p2.b),
                c: fd(m2.c, m1.c, p1.c, p2.c),
                f: fd(m2.f, m1.f, p1.f, p2.f),
            }
        } else {
            let dir = if t - 2.0 * h < self.epsilon { 1.0 } else { -1.0 };
            let (p0, p1, p2, p3, p4) = (
                k,
                g(t + dir * h),
                g(t + dir * 2.0 * h),
                g(t + dir * 3.0 * h),
                g(t + dir * 4.0 * h),
            );
            let fd = |a: f64, b: f64, c: f64, e: f64, f: f64| {
                dir * (-25.0 * a + 48.0 * b - 36.0 * c + 16.0 * e - 3.0 * f) / (12.0 * h)
            };
            Coefficients {
                a: fd(p0.a, p1.a, p2.a, p3.a, p4.a),
                b: fd(p0.b, p1.b, p2.b, p3.b, p4.b),
                c: fd(p0.c, p1.c, p2.c, p3.c, p4.c),
                f: fd(p0.f, p1.f, p2.f, p3.f, p4.f),
            }
        };
        let u_t = d.value(x, y);
        let p = &self.params;
        let u_x = 2.0 * x * k.a + y * k.c;
        let u_y = 2.0 * y * k.b + x * k.c;
        let u_yy = 2.0 * k.b;
        let lambda = match self.variant {
            RiccatiVariant::Dh => self.risk_c * x * x,
            RiccatiVariant::Dl => self.risk_c,
        };
        let feedback = 0.5 * (u_x + p.eta * u_y);
        let rhs = 0.5 * p.sigma * p.sigma * u_yy - p.beta * y * u_y + p.kappa * y * y + lambda
            - feedback * feedback;
        Ok((u_t - rhs).abs())
    }

    /// Writes `tau,A,B,C,F` for every `stride`-th node.
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "A", "B", "C", "F"])?;
        let stride = stride.max(1);
        let last = self.nodes.len() - 1;
        for k in (0..=last).step_by(stride).chain(std::iter::once(last).filter(|l| l % stride != 0)) {
            let (tau, c) = self.node(k);
            w.write_record([
                tau.to_string(),
                c.a.to_string(),
                c.b.to_string(),
                c.c.to_string(),
                c.f.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> FlowParams {
        FlowParams::weak_leakage()
    }

    fn coth(z: f64) -> f64 {
        1.0 / z.tanh()
    }

    #[test]
    fn initial_values_follow_short_time_expansion() {
        let p = fig2();
        let coef = solve_riccati(&p, InventoryRisk::Quadratic(0.1), 1.0, 1e-3, 1e-4).unwrap();
        let (tau, k) = coef.node(0);
        assert_eq!(tau, 1e-3);
        assert!((k.a - 1000.0).abs() < 1e-9);
        assert!((k.b - 0.01).abs() < 1e-15);
        assert!((k.c + 5e-4).abs() < 1e-15);
        assert!((k.f - 9.8e-8).abs() < 1e-18);
    }

    #[test]
    fn pure_impact_recovers_inverse_time() {
        let mut p = fig2();
        p.kappa = 0.0;
        let coef = solve_riccati(&p, InventoryRisk::Zero, 5.0, 1e-3, 1e-4).unwrap();
        for tau in [1e-3, 0.01, 0.1, 1.0, 3.0, 5.0] {
            let k = coef.at(tau).unwrap();
            assert!((k.a - 1.0 / tau).abs() <= 1e-6 / tau, "tau {tau}: {}", k.a);
            assert_eq!(k.b, 0.0);
            assert_eq!(k.c, 0.0);
            assert_eq!(k.f, 0.0);
        }
        // ML value x^2 / T
        assert!((coef.value(3.0, 3.0, 0.0).unwrap() - 3.0).abs() < 1e-6);
    }

    #[test]
    fn no_informational_cost_gives_hyperbolic_value() {
        let mut p = fig2();
        p.kappa = 0.0;
        let coef = solve_riccati(&p, InventoryRisk::Quadratic(0.1), 4.0, 1e-3, 1e-4).unwrap();
        let r = 0.1f64.sqrt();
        let u = coef.value(3.0, 3.0, 0.0).unwrap();
        let exact = 9.0 * r * coth(3.0 * r);
        assert!((u - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn outside_grid_is_domain_error() {
        let coef = solve_riccati(&fig2(), InventoryRisk::Constant(0.1), 2.0, 1e-3, 1e-4).unwrap();
        assert!(coef.value(5e-4, 1.0, 0.0).is_err());
        assert!(coef.value(2.5, 1.0, 0.0).is_err());
        assert!(coef.value(2.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn rejects_linear_risk_and_bad_steps() {
        let p = fig2();
        assert!(solve_riccati(&p, InventoryRisk::Linear(0.1), 2.0, 1e-3, 1e-4).is_err());
        assert!(solve_riccati(&p, InventoryRisk::Constant(0.1), 2.0, 1e-3, 5e-4).is_err());
        assert!(solve_riccati(&p, InventoryRisk::Constant(0.1), 1e-3, 1e-3, 1e-4).is_err());
    }

    #[test]
    fn rate_reduces_to_impact_rate_without_flow() {
        let mut p = fig2();
        p.kappa = 0.0;
        let coef = solve_riccati(&p, InventoryRisk::Quadratic(0.1), 4.0, 1e-3, 1e-4).unwrap();
        let k = coef.at(2.0).unwrap();
        assert!((coef.rate(2.0, 3.0, 0.0, false) - 3.0 * k.a).abs() < 1e-12);
    }

    #[test]
    fn rate_near_deadline_is_inventory_over_epsilon() {
        let coef = solve_riccati(&fig2(), InventoryRisk::Quadratic(0.1), 1.0, 1e-3, 1e-4).unwrap();
        let a = coef.rate(1e-3, 3.0, 0.2, false);
        assert!((a - 3000.0).abs() < 0.01);
    }

    #[test]
    fn clamping_is_counted() {
        let coef = solve_riccati(&fig2(), InventoryRisk::Constant(0.1), 30.0, 1e-3, 1e-4).unwrap();
        // strongly negative imbalance over a long horizon
        let raw = coef.rate(30.0, 0.01, -3.0, false);
        assert!(raw < 0.0, "expected a negative raw rate, got {raw}");
        assert_eq!(coef.rate(30.0, 0.01, -3.0, true), 0.0);
        assert_eq!(coef.clamp_count(), 1);
    }

    #[test]
    fn reflection_identity() {
        let coef = solve_riccati(&fig2(), InventoryRisk::Constant(0.1), 4.0, 1e-3, 1e-4).unwrap();
        for &(t, x, y) in &[(0.5, 1.0, 0.3), (2.0, 3.0, -0.2), (3.7, 0.4, 0.9)] {
            let k = coef.at(t).unwrap();
            let d = coef.value(t, x, -y).unwrap() - coef.value(t, x, y).unwrap();
            assert!((d + 2.0 * x * y * k.c).abs() < 1e-12);
        }
    }

    #[test]
    fn f_is_non_decreasing() {
        let coef = solve_riccati(&fig2(), InventoryRisk::Constant(0.1), 10.0, 1e-3, 1e-4).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..coef.len() {
            let (_, c) = coef.node(k);
            assert!(c.a > 0.0);
            assert!(c.b >= 0.0);
            assert!(c.f >= prev);
            prev = c.f;
        }
    }

    #[test]
    fn residual_at_origin_is_f_equation() {
        let coef = solve_riccati(&fig2(), InventoryRisk::Constant(0.1), 4.0, 1e-3, 1e-4).unwrap();
        for t in [0.01, 0.5, 2.0, 3.9] {
            assert!(coef.pde_residual(t, 0.0, 0.0).unwrap() < 1e-8);
        }
    }

    #[test]
    fn csv_export_rows() {
        let coef = solve_riccati(&fig2(), InventoryRisk::Constant(0.1), 0.0105, 1e-3, 1e-4).unwrap();
        let mut buf = Vec::new();
        coef.write_csv(&mut buf, 10).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "tau,A,B,C,F");
        // nodes 0, 10, 20, ..., 90 plus the last node 95
        assert_eq!(lines.len(), 1 + 11);
    }
}
