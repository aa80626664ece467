//! How long the receding dynamic strategy actually takes, depending on
//! the imbalance it starts in.

use flowexec::simulation::{horizon_distribution, write_horizon_histogram, SimConfig, Table1Setup};

fn main() -> flowexec::Result<()> {
    let cfg = SimConfig::table1();
    let setup = Table1Setup::build(&cfg)?;
    let (_, kind) = setup.strategies().into_iter().find(|(n, _)| *n == "receding_D").unwrap();

    let samples = horizon_distribution(&kind, &cfg, &[-0.25, 0.0, 0.25], 1000, 11)?;
    for s in &samples {
        println!(
            "y0 = {:+.2}: median T0 = {:.3}, corr(J, T0) = {:+.3}",
            s.y0,
            s.median_t0(),
            s.cost_horizon_correlation()
        );
    }
    let out = std::env::temp_dir().join("horizon_histogram.csv");
    write_horizon_histogram(std::fs::File::create(&out)?, &samples, 30)?;
    println!("histogram written to {}", out.display());
    Ok(())
}
