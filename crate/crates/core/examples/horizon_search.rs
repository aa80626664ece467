//! Picks the execution horizon that minimises expected cost, for the
//! linear strategy and for the dynamic one, and shows how the choice
//! moves with the initial imbalance.

use std::sync::Arc;

use flowexec::horizon::{elo_static_horizon, HorizonModel, DEFAULT_TOL};
use flowexec::myopic::InventoryRisk;
use flowexec::ou_flow::FlowParams;
use flowexec::riccati::{solve_riccati, DEFAULT_EPSILON, DEFAULT_STEP};

fn main() -> flowexec::Result<()> {
    let params = FlowParams::table1();
    let risk = InventoryRisk::Constant(0.1);
    let x = 3.0;

    let ml = HorizonModel::myopic_ml(params, risk);
    let coef = solve_riccati(&params, risk, 40.0, DEFAULT_EPSILON, DEFAULT_STEP)?;
    let dynamic = HorizonModel::dynamic(Arc::new(coef));

    println!("{:>6} {:>16} {:>16}", "y", "T* linear", "T* dynamic");
    for y in [-0.5, -0.25, 0.0, 0.25, 0.5] {
        let a = ml.optimal(x, y, 1.0, DEFAULT_TOL)?;
        let b = dynamic.optimal(x, y, 1.0, DEFAULT_TOL)?;
        println!(
            "{y:>+6.2} {:>8.4} ({:.3}) {:>8.4} ({:.3})",
            a.t_star, a.value_at_star, b.t_star, b.value_at_star
        );
    }

    println!("\nexpected cost against horizon at y = 0");
    for t in [0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 10.0] {
        println!("  T = {t:>4}: linear {:.4}, dynamic {:.4}", ml.value(t, x, 0.0)?, dynamic.value(t, x, 0.0)?);
    }

    // Toxicity-style objective: the footprint eta * x only washes out at the
    // decay rate, so waiting pays off only while the timing cost is small.
    // Past that the answer jumps to trading at once (the horizon floor).
    let p = FlowParams { eta: 0.5, ..params };
    for c in [0.05, 0.1, 0.2, 0.3] {
        let r = elo_static_horizon(x, -0.5, c, &p)?;
        println!("E|Y_T| + {c} sqrt(T) from y = -0.5: T* = {:.3}", r.t_star);
    }
    Ok(())
}
