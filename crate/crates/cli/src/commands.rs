use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Subcommand};
use serde::Serialize;

use flowexec::discrete_dp::{build_model, stationary_value, write_stage_csv, DpSpec};
use flowexec::flow_metrics::{
    beta_from_daily, ingest_trades, write_buckets, BucketFiller, BucketSeries, Ewma, KindFilter, TradeReader, DEFAULT_MEMORY,
};
use flowexec::hjb::{solve_indefinite, GridSpec};
use flowexec::horizon::{elo_static_horizon, receding_step, HorizonModel, DEFAULT_TOL};
use flowexec::myopic::{myopic_solve, myopic_value, InventoryRisk};
use flowexec::riccati::{solve_riccati, DEFAULT_EPSILON, DEFAULT_STEP};
use flowexec::simulation::{
    comparative_statics, horizon_distribution, monte_carlo, run_strategy, table1, write_horizon_histogram,
    write_horizon_scatter, write_rates, write_table1, write_trajectories, Table1Row, Table1Setup, RICCATI_T_MAX,
};

use crate::config::Config;
use crate::run::Run;

#[derive(Debug, Args, Serialize)]
pub struct MyopicArgs {
    /// Execution horizon.
    #[arg(long, default_value_t = 3.0)]
    pub horizon: f64,
    /// Sample intervals per curve.
    #[arg(long, default_value_t = 300)]
    pub samples: usize,
}

/// Linear, hyperbolic and quadratic curves for the configured inventory
/// and coefficient, plus their expected costs at `y0`.
pub fn myopic(cfg: &Config, a: &MyopicArgs, run: &mut Run) -> anyhow::Result<()> {
    let p = cfg.params();
    let forms = [
        ("ML", InventoryRisk::Constant(cfg.c)),
        ("MH", InventoryRisk::Quadratic(cfg.c)),
        ("MQ", InventoryRisk::Linear(cfg.c)),
    ];
    let mut curves = csv_writer(run.create("myopic_trajectories.csv")?);
    curves.write_record(["strategy", "t", "x", "alpha"])?;
    let mut values = csv_writer(run.create("myopic_values.csv")?);
    values.write_record(["strategy", "T", "T_hat", "impact_cost", "u"])?;
    for (name, risk) in forms {
        let sol = myopic_solve(risk, cfg.x0, a.horizon)?;
        for (t, x, r) in sol.sample(a.samples) {
            curves.write_record([name.to_string(), t.to_string(), x.to_string(), r.to_string()])?;
        }
        let u = myopic_value(risk, a.horizon, cfg.x0, cfg.y0, &p)?;
        values.write_record([
            name.to_string(),
            a.horizon.to_string(),
            sol.effective_horizon.to_string(),
            sol.impact_cost.to_string(),
            u.to_string(),
        ])?;
    }
    curves.flush()?;
    values.flush()?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct RiccatiArgs {
    #[arg(long, default_value_t = RICCATI_T_MAX)]
    pub t_max: f64,
    /// Start of integration; the coefficients there come from the
    /// short-time expansion.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    /// Keep every n-th node in the output.
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
}

pub fn riccati(cfg: &Config, a: &RiccatiArgs, run: &mut Run) -> anyhow::Result<()> {
    let coef = solve_riccati(&cfg.params(), cfg.inventory_risk()?, a.t_max, a.epsilon, a.step)?;
    coef.write_csv(run.create("riccati.csv")?, a.stride)?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct HjbArgs {
    /// Inventory steps; overrides the stable default grid.
    #[arg(long)]
    pub n_x: Option<usize>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub n_y: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub y_lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y_hi: Option<f64>,
    /// Keep every n-th grid row and column in the CSV.
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    /// Also dump the full surface in binary form.
    #[arg(long)]
    pub binary: bool,
}

pub fn hjb(cfg: &Config, a: &HjbArgs, run: &mut Run) -> anyhow::Result<()> {
    let p = cfg.params();
    let risk = cfg.inventory_risk()?;
    let d = GridSpec::default_for(cfg.x0, &p, risk)?;
    let dx = a.dx.unwrap_or(d.dx);
    let n_x = a.n_x.unwrap_or_else(|| (cfg.x0 / dx).ceil() as usize);
    let grid = GridSpec::new(
        n_x,
        dx,
        a.n_y.unwrap_or(d.n_y),
        a.y_lo.unwrap_or(d.y_lo),
        a.y_hi.unwrap_or(d.y_hi),
    )?;
    let surface = solve_indefinite(&p, risk, grid)?;
    surface.write_csv(run.create("hjb_value.csv")?, a.stride)?;
    if a.binary {
        surface.write_binary(run.create("hjb_value.bin")?)?;
    }
    println!("v({}, {}) = {}", cfg.x0, cfg.y0, surface.value(cfg.x0, cfg.y0)?);
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct HorizonArgs {
    /// Longest horizon on the value curve.
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Imbalances for the initial-rate table.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
          default_value = "-0.5,-0.4,-0.3,-0.2,-0.1,0,0.1,0.2,0.3,0.4,0.5")]
    pub ys: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

/// Optimal horizons of the linear and dynamic families, their value
/// curves, and initial receding rates across imbalances.
pub fn optimize_horizon(cfg: &Config, a: &HorizonArgs, run: &mut Run) -> anyhow::Result<()> {
    let p = cfg.params();
    let risk = cfg.inventory_risk()?;
    let ml = HorizonModel::myopic_ml(p, risk);
    let coef = Arc::new(solve_riccati(
        &p,
        risk,
        RICCATI_T_MAX.max(a.t_max),
        DEFAULT_EPSILON,
        DEFAULT_STEP,
    )?);
    let dynamic = HorizonModel::dynamic(coef);

    let mut w = csv_writer(run.create("horizon.csv")?);
    w.write_record(["family", "t_star", "value", "t_bar", "evaluations"])?;
    let mut results = vec![
        ("ML", ml.optimal(cfg.x0, cfg.y0, 1.0, a.tol)?),
        ("dynamic", dynamic.optimal(cfg.x0, cfg.y0, 1.0, a.tol)?),
    ];
    if let InventoryRisk::Constant(c) = risk {
        results.push(("ELO", elo_static_horizon(cfg.x0, cfg.y0, c, &p)?));
    }
    for (name, r) in &results {
        w.write_record([
            name.to_string(),
            r.t_star.to_string(),
            r.value_at_star.to_string(),
            r.t_bar.to_string(),
            r.evaluations.to_string(),
        ])?;
        println!("{name}: T* = {:.6}, u = {:.6}", r.t_star, r.value_at_star);
    }
    w.flush()?;

    let mut w = csv_writer(run.create("horizon_curve.csv")?);
    w.write_record(["T", "u_ML", "u_dynamic"])?;
    let n = a.points.max(2);
    for k in 1..=n {
        let t = a.t_max * k as f64 / n as f64;
        w.write_record([
            t.to_string(),
            ml.value(t, cfg.x0, cfg.y0)?.to_string(),
            dynamic.value(t, cfg.x0, cfg.y0)?.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv_writer(run.create("horizon_rates.csv")?);
    w.write_record(["y", "rate_ML", "t_star_ML", "rate_dynamic", "t_star_dynamic"])?;
    for &y in &a.ys {
        let (rm, hm) = receding_step(&ml, cfg.x0, y, 1.0)?;
        let (rd, hd) = receding_step(&dynamic, cfg.x0, y, 1.0)?;
        w.write_record([
            y.to_string(),
            rm.to_string(),
            hm.t_star.to_string(),
            rd.to_string(),
            hd.t_star.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const STRATEGIES: [&str; 6] = ["v", "receding_D", "receding_ML", "two_stage_ML", "static_D", "static_ML"];

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// One of v, receding_D, receding_ML, two_stage_ML, static_D, static_ML.
    #[arg(long, default_value = "receding_D", value_parser = clap::builder::PossibleValuesParser::new(STRATEGIES))]
    pub strategy: String,
    /// Also write the first path in full.
    #[arg(long)]
    pub trajectory: bool,
}

pub fn simulate(cfg: &Config, a: &SimulateArgs, run: &mut Run) -> anyhow::Result<()> {
    let sim = cfg.sim()?;
    let setup = Table1Setup::build(&sim)?;
    let (name, kind) = setup
        .strategies()
        .into_iter()
        .find(|(n, _)| *n == a.strategy)
        .expect("strategy names are checked by the parser");
    let stats = monte_carlo(&kind, &sim, cfg.paths, cfg.seed)?;
    let rows = [Table1Row {
        strategy: name.to_string(),
        stats,
    }];
    write_table1(run.create("simulate.csv")?, &rows)?;
    println!("{name}: E[J] = {:.4} +- {:.4}, E[T0] = {:.4}", stats.mean, stats.se, stats.mean_t0);
    if a.trajectory {
        let tr = run_strategy(&kind, &sim, cfg.seed)?;
        write_trajectories(run.create("trajectory.csv")?, &[(name, &tr)])?;
    }
    Ok(())
}

pub fn table(cfg: &Config, run: &mut Run) -> anyhow::Result<()> {
    let rows = table1(&cfg.sim()?, cfg.paths, cfg.seed)?;
    write_table1(run.create("table1.csv")?, &rows)?;
    println!("{:<14} {:>8} {:>8} {:>8} {:>8} {:>8}", "strategy", "mean", "sd", "q05", "q95", "E[T0]");
    for r in &rows {
        let s = &r.stats;
        println!(
            "{:<14} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.strategy, s.mean, s.sd, s.q05, s.q95, s.mean_t0
        );
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct StaticsArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,2.5,5,10,20")]
    pub kappas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.025,0.05,0.075,0.1")]
    pub etas: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
          default_value = "-0.5,-0.25,0,0.25,0.5")]
    pub ys: Vec<f64>,
}

pub fn statics(cfg: &Config, a: &StaticsArgs, run: &mut Run) -> anyhow::Result<()> {
    let rows = comparative_statics(&cfg.params(), cfg.inventory_risk()?, cfg.x0, &a.kappas, &a.etas, &a.ys)?;
    write_rates(run.create("statics.csv")?, &rows)?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct HorizonsArgs {
    #[arg(long, default_value = "receding_D", value_parser = clap::builder::PossibleValuesParser::new(STRATEGIES))]
    pub strategy: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.25,0,0.25")]
    pub y0s: Vec<f64>,
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
}

/// Realised execution horizons for several starting imbalances.
pub fn horizons(cfg: &Config, a: &HorizonsArgs, run: &mut Run) -> anyhow::Result<()> {
    let sim = cfg.sim()?;
    let setup = Table1Setup::build(&sim)?;
    let (_, kind) = setup
        .strategies()
        .into_iter()
        .find(|(n, _)| *n == a.strategy)
        .expect("strategy names are checked by the parser");
    let samples = horizon_distribution(&kind, &sim, &a.y0s, cfg.paths, cfg.seed)?;
    write_horizon_histogram(run.create("horizon_histogram.csv")?, &samples, a.bins)?;
    write_horizon_scatter(run.create("horizon_scatter.csv")?, &samples)?;
    let mut w = csv_writer(run.create("horizon_medians.csv")?);
    w.write_record(["y0", "median_T0", "corr_J_T0"])?;
    for s in &samples {
        w.write_record([
            s.y0.to_string(),
            s.median_t0().to_string(),
            s.cost_horizon_correlation().to_string(),
        ])?;
        println!("y0 = {:>6}: median T0 = {:.4}", s.y0, s.median_t0());
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct DpArgs {
    #[arg(long, default_value_t = 20)]
    pub n_alpha: usize,
    #[arg(long, default_value_t = 41)]
    pub n_x: usize,
    #[arg(long, default_value_t = 41)]
    pub n_y: usize,
    #[arg(long, default_value_t = 1.0)]
    pub bucket_volume: f64,
    /// `psi(alpha) = alpha^p`.
    #[arg(long, default_value_t = 1.0)]
    pub psi_exponent: f64,
    /// Terminal cost coefficient; defaults to `1 / V^2`.
    #[arg(long)]
    pub terminal_a: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_stages: usize,
}

/// Stationary value and policy of the bucket-time model. The flow
/// parameters are read per unit of volume.
pub fn dp(cfg: &Config, a: &DpArgs, run: &mut Run) -> anyhow::Result<()> {
    let spec = DpSpec {
        n_alpha: a.n_alpha,
        n_x: a.n_x,
        n_y: a.n_y,
        bucket_volume: a.bucket_volume,
        psi_exponent: a.psi_exponent,
        beta: cfg.beta,
        sigma: cfg.sigma,
        kappa: cfg.kappa,
        risk: cfg.inventory_risk()?,
        terminal_a: a.terminal_a,
    };
    let model = build_model(spec)?;
    let res = stationary_value(&model, a.tol, a.max_stages)?;
    write_stage_csv(run.create("dp_policy.csv")?, &model, res.table.last())?;
    let mut w = csv_writer(run.create("dp_convergence.csv")?);
    w.write_record(["iteration", "gap"])?;
    for (k, g) in res.gaps.iter().enumerate() {
        w.write_record([(k + 1).to_string(), g.to_string()])?;
    }
    w.flush()?;
    println!(
        "{} after {} iterations, sup-norm gap {:.3e}",
        if res.converged { "converged" } else { "not converged" },
        res.iterations,
        res.gap
    );
    Ok(())
}

#[derive(Debug, Subcommand, Serialize)]
pub enum FlowCommand {
    /// EWMA imbalance after every trade.
    Ewma(EwmaArgs),
    /// Volume-bucket imbalance and VPIN.
    Buckets(BucketArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EwmaArgs {
    /// Trades as `index,signed_volume[,kind]`.
    #[arg(long)]
    pub input: PathBuf,
    /// Memory per share; overrides the daily-volume rule.
    #[arg(long)]
    pub beta: Option<f64>,
    /// `beta = a / V_daily`.
    #[arg(long, default_value_t = DEFAULT_MEMORY)]
    pub beta_a: f64,
    /// Daily volume for the rule above; defaults to the file's total.
    #[arg(long)]
    pub daily_volume: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub i0: f64,
    /// Count limit orders at the touch as flow.
    #[arg(long)]
    pub include_touch: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct BucketArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 25_000.0)]
    pub bucket_volume: f64,
    /// VPIN window in buckets.
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    #[arg(long)]
    pub include_touch: bool,
}

fn open(path: &std::path::Path, kinds: KindFilter) -> anyhow::Result<TradeReader<std::fs::File>> {
    ingest_trades(path, kinds).with_context(|| format!("cannot open {}", path.display()))
}

fn filter(include_touch: bool) -> KindFilter {
    if include_touch {
        KindFilter::IncludeTouch
    } else {
        KindFilter::ExecutionOnly
    }
}

pub fn flow(cmd: &FlowCommand, run: &mut Run) -> anyhow::Result<()> {
    match cmd {
        FlowCommand::Ewma(a) => {
            let kinds = filter(a.include_touch);
            let beta = match (a.beta, a.daily_volume) {
                (Some(b), _) => b,
                (None, Some(v)) => beta_from_daily(a.beta_a, v)?,
                (None, None) => {
                    let mut total = 0.0;
                    for t in open(&a.input, kinds)? {
                        total += t?.signed_volume.abs();
                    }
                    beta_from_daily(a.beta_a, total)?
                }
            };
            let mut state = Ewma::new(beta, a.i0)?;
            let mut w = csv_writer(run.create("imbalance.csv")?);
            w.write_record(["k", "I_k"])?;
            w.write_record(["0".to_string(), a.i0.to_string()])?;
            for (k, t) in open(&a.input, kinds)?.enumerate() {
                let v = state.update(&t?)?;
                w.write_record([(k + 1).to_string(), v.to_string()])?;
            }
            w.flush()?;
            println!("beta = {beta:e}, final I = {}", state.value());
        }
        FlowCommand::Buckets(a) => {
            let mut filler = BucketFiller::new(a.bucket_volume)?;
            let mut buckets = Vec::new();
            for t in open(&a.input, filter(a.include_touch))? {
                filler.push(t?.signed_volume, &mut buckets);
            }
            let series = BucketSeries {
                bucket_volume: a.bucket_volume,
                buckets,
            };
            write_buckets(run.create("buckets.csv")?, &series, a.window)?;
            println!("{} complete buckets, {} shares pending", series.buckets.len(), filler.pending());
        }
    }
    Ok(())
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}
