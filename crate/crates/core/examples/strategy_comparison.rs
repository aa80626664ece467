//! Monte Carlo comparison of the six strategies on common random numbers.
//!
//! `cargo run --release --example strategy_comparison -- 20000` reproduces
//! the full-size study; the default is a quick 2000-path run.

use flowexec::simulation::{table1, SimConfig};

fn main() -> flowexec::Result<()> {
    let n_paths = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let cfg = SimConfig::table1();
    let started = std::time::Instant::now();
    let rows = table1(&cfg, n_paths, 7)?;

    println!("{n_paths} paths, {:.1?}", started.elapsed());
    println!("{:<14} {:>8} {:>7} {:>7} {:>7} {:>7} {:>7}", "strategy", "E[J]", "se", "sd", "q05", "q95", "E[T0]");
    for r in &rows {
        let s = &r.stats;
        println!(
            "{:<14} {:>8.4} {:>7.4} {:>7.3} {:>7.3} {:>7.3} {:>7.3}",
            r.strategy, s.mean, s.se, s.sd, s.q05, s.q95, s.mean_t0
        );
    }
    Ok(())
}
