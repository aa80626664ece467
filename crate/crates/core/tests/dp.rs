use flowexec::discrete_dp::{bellman_update, build_model, stationary_value, terminal_stage, value_iteration, DpSpec};
use flowexec::myopic::InventoryRisk;

fn small() -> DpSpec {
    DpSpec {
        n_alpha: 5,
        n_x: 11,
        n_y: 5,
        ..DpSpec::default()
    }
}

#[test]
fn bellman_update_is_monotone() {
    let model = build_model(small()).unwrap();
    let low = terminal_stage(&model).values;
    let high: Vec<f64> = low.iter().enumerate().map(|(k, v)| v + 0.1 * (k % 7) as f64).collect();
    let (a, b) = (bellman_update(&model, &low), bellman_update(&model, &high));
    assert!(a.values.iter().zip(&b.values).all(|(x, y)| x <= y));
}

#[test]
fn policy_rises_with_buy_pressure() {
    // selling into buy pressure is cheaper; below zero the trader also
    // speeds up to escape the informational cost, so only y >= 0 is monotone
    let model = build_model(small()).unwrap();
    let res = stationary_value(&model, 1e-9, 1000).unwrap();
    assert!(res.converged);
    let mid = model.y_grid.iter().position(|&y| y >= 0.0).unwrap();
    for i in 1..model.x_grid.len() {
        let row: Vec<f64> = (mid..model.y_grid.len()).map(|j| res.table.policy(0, i, j)).collect();
        assert!(row.windows(2).all(|w| w[1] >= w[0]), "x = {}: {row:?}", model.x_grid[i]);
    }
}

#[test]
fn values_fall_with_more_time_once_the_deadline_bites() {
    // an extra bucket can cost more than a mild terminal charge, but once
    // v1 <= v0 monotonicity of the update carries it to every stage
    let model = build_model(DpSpec {
        terminal_a: Some(1e3),
        ..small()
    })
    .unwrap();
    let table = value_iteration(&model, 12).unwrap();
    for t in 0..12 {
        let (prev, next) = (&table.stages[t].values, &table.stages[t + 1].values);
        assert!(next.iter().zip(prev).all(|(n, p)| *n <= *p + 1e-12));
    }
}

#[test]
fn empty_inventory_costs_nothing() {
    let model = build_model(DpSpec::default()).unwrap();
    let table = value_iteration(&model, 3).unwrap();
    for j in 0..model.y_grid.len() {
        assert_eq!(table.value(3, 0, j), 0.0);
        assert_eq!(table.policy(3, 0, j), 0.0);
    }
}

#[test]
fn kernel_means_track_the_drift() {
    let spec = DpSpec {
        sigma: 0.01,
        n_y: 201,
        ..DpSpec::default()
    };
    let model = build_model(spec).unwrap();
    let dy = model.y_grid[1] - model.y_grid[0];
    for j in [20, 100, 180] {
        for m in [1, 10, 20] {
            let alpha = m as f64 / spec.n_alpha as f64;
            let want = model.expected_next(model.y_grid[j], alpha).clamp(-1.0, 1.0);
            assert!((model.kernel_mean(j, m) - want).abs() < dy, "j {j} m {m}");
        }
    }
}

#[test]
fn rejects_bad_specs() {
    for spec in [
        DpSpec { n_alpha: 0, ..DpSpec::default() },
        DpSpec { n_y: 1, ..DpSpec::default() },
        DpSpec { bucket_volume: -1.0, ..DpSpec::default() },
        DpSpec { risk: InventoryRisk::Constant(-0.1), ..DpSpec::default() },
    ] {
        assert!(build_model(spec).is_err(), "{spec:?}");
    }
}
