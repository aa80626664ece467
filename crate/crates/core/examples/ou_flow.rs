//! Simulates the order-flow imbalance with and without the footprint of a
//! constant-rate seller and compares the sample moments with the exact
//! Gaussian ones.

use flowexec::ou_flow::{moments, simulate_path, FlowParams, LeakageSpec, Schedule};

fn main() -> flowexec::Result<()> {
    let p = FlowParams::table1();
    let (x, horizon, dt) = (3.0, 3.0, 0.01);
    let rate = x / horizon;
    let n_paths = 4000;

    println!("stationary sd of Y: {:.4}", p.stationary_variance().sqrt());
    for (label, phi) in [("no footprint", 0.0), ("selling x/T", p.eta * rate)] {
        let mut end = Vec::with_capacity(n_paths);
        for k in 0..n_paths {
            let path = simulate_path(&p, 0.0, |_, _| phi, dt, horizon, k as u64)?;
            end.push(path.last());
        }
        let mean = end.iter().sum::<f64>() / n_paths as f64;
        let var = end.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n_paths - 1) as f64;

        let schedule = Schedule::Constant(phi);
        let exact = moments(horizon, 0.0, &p, &LeakageSpec::Deterministic(schedule))?;
        println!(
            "{label:>13}: E[Y_T] = {mean:+.4} (exact {:+.4}), Var = {var:.5} (exact {:.5})",
            exact.mu, exact.sigma2
        );
    }

    let path = simulate_path(&p, 0.2, |_, _| 0.0, dt, 10.0, 1)?;
    let out = std::env::temp_dir().join("ou_path.csv");
    path.write_csv(std::fs::File::create(&out)?)?;
    println!("one path from Y_0 = 0.2 written to {}", out.display());
    Ok(())
}
