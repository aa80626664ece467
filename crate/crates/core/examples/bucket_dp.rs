//! Value iteration for the volume-bucket model, where each bucket the
//! trader chooses a participation rate.

use flowexec::discrete_dp::{build_model, stationary_value, DpSpec};

fn main() -> flowexec::Result<()> {
    let model = build_model(DpSpec::default())?;
    let res = stationary_value(&model, 1e-6, 10_000)?;
    println!(
        "converged: {} after {} stages (gap {:.1e})",
        res.converged, res.iterations, res.gap
    );

    let t = &res.table;
    let stage = t.stages.len() - 1;
    let js = [0, 10, 20, 30, 40];
    print!("{:>6}", "x \\ y");
    for &j in &js {
        print!(" {:>12.2}", model.y_grid[j]);
    }
    println!();
    for i in [4, 10, 20, 40] {
        print!("{:>6.2}", model.x_grid[i]);
        for &j in &js {
            print!(" {:>6.3}/{:<5.2}", t.value(stage, i, j), t.policy(stage, i, j));
        }
        println!();
    }
    println!("(value / participation rate)");
    Ok(())
}
