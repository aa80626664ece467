use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowexec::Error;

mod commands;
mod config;
mod run;

use commands::*;
use config::{Config, ConfigError, Overrides};
use run::Run;

/// Optimal execution under order-flow imbalance.
#[derive(Debug, Parser)]
#[command(name = "flowexec", version)]
struct Cli {
    /// Where outputs and manifests go.
    #[arg(long, global = true, env = "FLOWEXEC_OUT_DIR", default_value = "flowexec-out")]
    out_dir: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form myopic curves and their expected costs.
    Myopic(MyopicArgs),
    /// Coefficients of the quadratic value function over time to go.
    Riccati(RiccatiArgs),
    /// Finite-difference value surface of the open-horizon problem.
    Hjb(HjbArgs),
    /// Optimal horizons, value curves and initial receding rates.
    OptimizeHorizon(HorizonArgs),
    /// Monte Carlo cost of one strategy.
    Simulate(SimulateArgs),
    /// All six strategies on common random numbers.
    Table1,
    /// Initial rates across informational cost, leakage and imbalance.
    Statics(StaticsArgs),
    /// Distribution of realised execution horizons.
    Horizons(HorizonsArgs),
    /// Bucket-time dynamic programme.
    Dp(DpArgs),
    /// Order-flow imbalance from a trade file.
    #[command(subcommand)]
    Flow(FlowCommand),
}

// 2 is taken by clap for usage errors.
const EXIT_CONFIG: u8 = 3;
const EXIT_DOMAIN: u8 = 4;
const EXIT_NUMERICAL: u8 = 5;
const EXIT_DATA: u8 = 6;
const EXIT_IO: u8 = 7;
const EXIT_BUILD: u8 = 8;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::Domain(_) => EXIT_DOMAIN,
            Error::Simulation { .. } | Error::RiccatiBlowUp { .. } | Error::NegativeRadicand { .. } | Error::Search(_) => {
                EXIT_NUMERICAL
            }
            Error::Data { .. } | Error::Parse { .. } => EXIT_DATA,
            Error::Io(_) | Error::Csv(_) => EXIT_IO,
            Error::Build(_) => EXIT_BUILD,
        };
    }
    EXIT_IO
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = Config::resolve(&cli.overrides)?;
    macro_rules! go {
        ($name:literal, $args:expr, |$r:ident| $body:expr) => {{
            let mut $r = Run::new(&cli.out_dir, $name)?;
            $body?;
            $r.finish(&cfg, $args)?;
        }};
    }
    match &cli.command {
        Command::Myopic(a) => go!("myopic", a, |r| myopic(&cfg, a, &mut r)),
        Command::Riccati(a) => go!("riccati", a, |r| riccati(&cfg, a, &mut r)),
        Command::Hjb(a) => go!("hjb", a, |r| hjb(&cfg, a, &mut r)),
        Command::OptimizeHorizon(a) => go!("optimize-horizon", a, |r| optimize_horizon(&cfg, a, &mut r)),
        Command::Simulate(a) => go!("simulate", a, |r| simulate(&cfg, a, &mut r)),
        Command::Table1 => go!("table1", &(), |r| table(&cfg, &mut r)),
        Command::Statics(a) => go!("statics", a, |r| statics(&cfg, a, &mut r)),
        Command::Horizons(a) => go!("horizons", a, |r| horizons(&cfg, a, &mut r)),
        Command::Dp(a) => go!("dp", a, |r| dp(&cfg, a, &mut r)),
        Command::Flow(f) => go!("flow", f, |r| flow(f, &mut r)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
