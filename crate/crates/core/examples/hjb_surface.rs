//! Finite-difference value of the open-horizon problem and the feedback
//! selling rate it implies.

use flowexec::hjb::{solve_indefinite, GridSpec};
use flowexec::myopic::InventoryRisk;
use flowexec::ou_flow::FlowParams;

fn main() -> flowexec::Result<()> {
    let params = FlowParams::table1();
    let risk = InventoryRisk::Constant(0.1);
    let grid = GridSpec::default_for(3.0, &params, risk)?;
    println!(
        "grid: {} x {} (dx = {:.2e}, y in [{:.3}, {:.3}])",
        grid.n_x, grid.n_y, grid.dx, grid.y_lo, grid.y_hi
    );

    let started = std::time::Instant::now();
    let v = solve_indefinite(&params, risk, grid)?;
    println!("solved in {:.0?}", started.elapsed());

    let fine = solve_indefinite(&params, risk, grid.refined())?;
    let (a, b) = (v.value(3.0, 0.0)?, fine.value(3.0, 0.0)?);
    println!("v(3, 0) = {a:.5}; refined grid {b:.5} ({:+.3}%)", 100.0 * (b - a) / a);

    println!("\nfeedback rate");
    println!("{:>6} {:>9} {:>9} {:>9}", "y", "x = 0.5", "x = 1.5", "x = 3");
    for y in [-0.5, -0.25, 0.0, 0.25, 0.5] {
        let r: Vec<f64> = [0.5, 1.5, 3.0]
            .iter()
            .map(|&x| v.feedback_rate(x, y))
            .collect::<flowexec::Result<_>>()?;
        println!("{y:>+6.2} {:>9.4} {:>9.4} {:>9.4}", r[0], r[1], r[2]);
    }

    let out = std::env::temp_dir().join("hjb_value.csv");
    v.write_csv(std::fs::File::create(&out)?, 20)?;
    println!("surface written to {}", out.display());
    Ok(())
}
