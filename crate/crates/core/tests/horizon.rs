use flowexec::horizon::{elo_static_horizon, expected_abs_imbalance, HorizonModel, DEFAULT_TOL};
use flowexec::myopic::InventoryRisk;
use flowexec::ou_flow::FlowParams;

fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|k| f(a + k as f64 * h) * if k == 0 || k == n { 0.5 } else { 1.0 })
        .sum::<f64>()
        * h
}

/// `E|Y_T|` by quadrature of the normal density, from the OU moments.
fn abs_imbalance_oracle(t: f64, x: f64, y: f64, p: &FlowParams) -> f64 {
    let decay = (-p.beta * t).exp();
    let mu = y * decay - p.eta * x / (p.beta * t) * (1.0 - decay);
    let sd = (p.sigma * p.sigma / (2.0 * p.beta) * (1.0 - decay * decay)).sqrt();
    let pdf = |z: f64| (-0.5 * ((z - mu) / sd).powi(2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
    trapezoid(|z| z.abs() * pdf(z), mu - 12.0 * sd, mu + 12.0 * sd, 40_000)
}

#[test]
fn folded_normal_matches_quadrature() {
    let p = FlowParams::table1();
    for (t, x, y) in [(0.1, 3.0, 0.0), (2.0, 3.0, -0.5), (10.0, 1.0, 0.4), (50.0, 5.0, -1.0)] {
        let got = expected_abs_imbalance(t, x, y, &p);
        let want = abs_imbalance_oracle(t, x, y, &p);
        assert!((got - want).abs() < 1e-8 * (1.0 + want), "{t} {x} {y}: {got} vs {want}");
    }
}

#[test]
fn toxicity_horizon_beats_a_dense_scan() {
    let p = FlowParams {
        eta: 0.5,
        ..FlowParams::table1()
    };
    for c in [0.05, 0.1, 0.2] {
        let r = elo_static_horizon(3.0, -0.5, c, &p).unwrap();
        let obj = |t: f64| abs_imbalance_oracle(t, 3.0, -0.5, &p) + c * t.sqrt();
        let scan = (0..=1000)
            .map(|k| 1e-3 * 10f64.powf(k as f64 * 5.0 / 1000.0))
            .map(obj)
            .fold(f64::INFINITY, f64::min);
        assert!(obj(r.t_star) <= scan + 1e-6, "c = {c}: T* = {} worse than scan", r.t_star);
    }
}

#[test]
fn warm_start_agrees_with_cold_search() {
    let model = HorizonModel::myopic_ml(FlowParams::table1(), InventoryRisk::Constant(0.1));
    for (x, y) in [(3.0, 0.0), (2.0, 0.3), (1.0, -0.4)] {
        let cold = model.optimal(x, y, 1.0, DEFAULT_TOL).unwrap();
        let warm = model.optimal_near(x, y, cold.t_star * 1.05, DEFAULT_TOL).unwrap();
        assert!((cold.t_star - warm.t_star).abs() < 1e-4, "{cold:?} {warm:?}");
    }
}

#[test]
fn more_inventory_takes_longer() {
    let model = HorizonModel::myopic_ml(FlowParams::table1(), InventoryRisk::Constant(0.1));
    let t: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&x| model.optimal(x, 0.0, 1.0, DEFAULT_TOL).unwrap().t_star)
        .collect();
    assert!(t.windows(2).all(|w| w[1] > w[0]), "{t:?}");
}
