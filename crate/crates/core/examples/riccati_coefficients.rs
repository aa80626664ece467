//! Solves for the coefficients of the quadratic value function and
//! compares the dynamic selling rate with the linear one across
//! imbalances.

use flowexec::myopic::InventoryRisk;
use flowexec::ou_flow::FlowParams;
use flowexec::riccati::{solve_riccati, DEFAULT_EPSILON, DEFAULT_STEP};

fn main() -> flowexec::Result<()> {
    let params = FlowParams::weak_leakage();
    let risk = InventoryRisk::Constant(0.1);
    let coef = solve_riccati(&params, risk, 10.0, DEFAULT_EPSILON, DEFAULT_STEP)?;

    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "tau", "A", "B", "C", "F");
    for tau in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0] {
        let k = coef.at(tau)?;
        println!("{tau:>6} {:>10.5} {:>10.5} {:>10.5} {:>10.5}", k.a, k.b, k.c, k.f);
    }

    let (x, tau) = (3.0, 3.0);
    println!("\nrates at x = {x}, {tau} units to go (linear rate x/T = {:.4})", x / tau);
    for y in [-0.5, -0.25, 0.0, 0.25, 0.5] {
        println!("  y = {y:+.2}: {:.4}", coef.rate(tau, x, y, true));
    }

    let worst = [0.05, 0.5, 2.0, 8.0]
        .iter()
        .flat_map(|&t| [0.0, 1.0, 3.0].map(move |x| (t, x)))
        .map(|(t, x)| {
            let r = coef.pde_residual(t, x, 0.3)?;
            Ok(r / coef.value(t, x, 0.3)?.abs().max(1.0))
        })
        .collect::<flowexec::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("\nlargest relative residual of the value PDE: {worst:.2e}");

    let out = std::env::temp_dir().join("riccati.csv");
    coef.write_csv(std::fs::File::create(&out)?, 100)?;
    println!("coefficients written to {}", out.display());
    Ok(())
}
