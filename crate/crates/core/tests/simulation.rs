use flowexec::horizon::RebalanceSchedule;
use flowexec::myopic::InventoryRisk;
use flowexec::ou_flow::FlowParams;
use flowexec::simulation::{monte_carlo, run_strategy, simulate_outcomes, SimConfig, StrategyKind, MIN_PATHS};

fn quiet() -> SimConfig {
    SimConfig {
        params: FlowParams {
            sigma: 0.0,
            kappa: 0.0,
            eta: 0.0,
            ..FlowParams::table1()
        },
        ..SimConfig::table1()
    }
}

#[test]
fn receding_linear_finishes_at_the_static_optimum_without_noise() {
    let cfg = quiet();
    let t_star = cfg.x0 / 0.1f64.sqrt();
    let stats = monte_carlo(&StrategyKind::RecedingMl, &cfg, MIN_PATHS, 1).unwrap();
    assert!((stats.mean_t0 - t_star).abs() <= cfg.dt + 1e-9, "{} vs {t_star}", stats.mean_t0);
    let fixed = monte_carlo(&StrategyKind::StaticMl { horizon: t_star }, &cfg, MIN_PATHS, 1).unwrap();
    assert!((stats.mean - fixed.mean).abs() < 1e-3 * fixed.mean);
}

#[test]
fn static_linear_cost_is_the_closed_form() {
    // x^2 / T + c T with no flow cost
    let cfg = quiet();
    let stats = monte_carlo(&StrategyKind::StaticMl { horizon: 4.0 }, &cfg, MIN_PATHS, 5).unwrap();
    assert!((stats.mean - (9.0 / 4.0 + 0.4)).abs() < 1e-9, "{}", stats.mean);
    assert!(stats.sd < 1e-12);
}

#[test]
fn paths_share_random_numbers_across_strategies() {
    let cfg = SimConfig {
        params: FlowParams {
            eta: 0.0,
            ..FlowParams::table1()
        },
        ..SimConfig::table1()
    };
    let a = run_strategy(&StrategyKind::StaticMl { horizon: 3.0 }, &cfg, 42).unwrap();
    let b = run_strategy(&StrategyKind::StaticMl { horizon: 5.0 }, &cfg, 42).unwrap();
    // the final step of the shorter run is cut to its horizon
    let n = a.imbalance.len().min(b.imbalance.len()) - 1;
    assert!(n > 100);
    assert_eq!(a.imbalance[..n], b.imbalance[..n]);
}

#[test]
fn outcomes_are_reproducible_and_ordered() {
    let cfg = SimConfig::table1();
    let kind = StrategyKind::TwoStageMl { horizon: 3.4 };
    let a = simulate_outcomes(&kind, &cfg, 200, 9).unwrap();
    let b = simulate_outcomes(&kind, &cfg, 200, 9).unwrap();
    assert_eq!(a, b);
    let single = run_strategy(&kind, &cfg, 9).unwrap();
    assert_eq!(a[0].cost, single.total_cost());
    assert_eq!(a[0].t0, single.t0);
}

#[test]
fn inventory_fraction_schedule_runs_and_sells_everything() {
    let cfg = SimConfig {
        rebalance: RebalanceSchedule::InventoryFraction { k: 4 },
        risk: InventoryRisk::Constant(0.1),
        ..SimConfig::table1()
    };
    let t = run_strategy(&StrategyKind::RecedingMl, &cfg, 3).unwrap();
    assert!(t.inventory.last().unwrap().abs() < 1e-12);
    assert!(t.inventory.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn rejects_bad_configurations() {
    let cfg = SimConfig { x0: 0.0, ..SimConfig::table1() };
    assert!(monte_carlo(&StrategyKind::RecedingMl, &cfg, MIN_PATHS, 1).is_err());
    let cfg = SimConfig::table1();
    assert!(monte_carlo(&StrategyKind::StaticMl { horizon: -1.0 }, &cfg, MIN_PATHS, 1).is_err());
    assert!(monte_carlo(&StrategyKind::RecedingMl, &cfg, MIN_PATHS - 1, 1).is_err());
}
