use flowexec::myopic::{myopic_solve, myopic_value, InventoryRisk};
use flowexec::ou_flow::FlowParams;

#[test]
fn curves_start_full_and_end_empty() {
    for risk in [
        InventoryRisk::Zero,
        InventoryRisk::Constant(0.3),
        InventoryRisk::Quadratic(0.3),
        InventoryRisk::Linear(0.3),
        InventoryRisk::Linear(20.0),
    ] {
        let s = myopic_solve(risk, 2.0, 4.0).unwrap();
        assert!((s.inventory(0.0) - 2.0).abs() < 1e-12, "{risk:?}");
        assert!(s.inventory(s.effective_horizon).abs() < 1e-12, "{risk:?}");
        assert_eq!(s.inventory(4.0), 0.0);
        let samples = s.sample(200);
        assert!(samples.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12), "{risk:?} not decreasing");
    }
}

#[test]
fn rate_is_minus_the_slope_of_inventory() {
    let s = myopic_solve(InventoryRisk::Quadratic(1.5), 3.0, 2.0).unwrap();
    let h = 1e-6;
    for t in [0.1, 0.7, 1.3, 1.9] {
        let slope = (s.inventory(t + h) - s.inventory(t - h)) / (2.0 * h);
        assert!((s.rate(t) + slope).abs() < 1e-6, "t = {t}");
    }
}

#[test]
fn value_without_flow_cost_is_the_impact_cost() {
    let p = FlowParams {
        kappa: 0.0,
        ..FlowParams::table1()
    };
    let risk = InventoryRisk::Constant(0.2);
    let s = myopic_solve(risk, 3.0, 5.0).unwrap();
    let v = myopic_value(risk, 5.0, 3.0, 0.4, &p).unwrap();
    assert!((v - s.impact_cost).abs() < 1e-12);
    assert!((v - (9.0 / 5.0 + 0.2 * 5.0)).abs() < 1e-12);
}

#[test]
fn rejects_bad_inputs() {
    assert!(myopic_solve(InventoryRisk::Constant(0.1), -1.0, 3.0).is_err());
    assert!(myopic_solve(InventoryRisk::Constant(0.1), 1.0, 0.0).is_err());
    assert!(myopic_solve(InventoryRisk::Quadratic(-0.1), 1.0, 1.0).is_err());
}
