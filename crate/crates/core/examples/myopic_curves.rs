//! The three deterministic liquidation curves for three units over three
//! time units with risk coefficient 2, and what each costs once the
//! informational cost of its footprint on the flow is added.

use flowexec::myopic::{myopic_solve, myopic_value, optimal_initial_imbalance, InventoryRisk};
use flowexec::ou_flow::FlowParams;

fn main() -> flowexec::Result<()> {
    let (x, horizon, c) = (3.0, 3.0, 2.0);
    let params = FlowParams::table1();
    let forms = [
        ("linear (constant risk)", InventoryRisk::Constant(c)),
        ("sinh (quadratic risk)", InventoryRisk::Quadratic(c)),
        ("quadratic (linear risk)", InventoryRisk::Linear(c)),
    ];

    for (name, risk) in forms {
        let sol = myopic_solve(risk, x, horizon)?;
        let u = myopic_value(risk, horizon, x, 0.0, &params)?;
        let y_best = optimal_initial_imbalance(risk, horizon, x, &params)?;
        println!("{name}");
        println!("  finishes at {:.4}, impact + risk cost {:.4}", sol.effective_horizon, sol.impact_cost);
        println!("  expected total cost at y = 0: {u:.4}; cheapest start y = {y_best:+.4}");
        print!("  x_t:");
        for (t, xt, _) in sol.sample(6) {
            print!(" {t:.1}:{xt:.3}");
        }
        println!();
    }
    println!("quadratic curve stops early at 2 sqrt(x/c) = {:.4}", 2.0 * (x / c).sqrt());
    Ok(())
}
