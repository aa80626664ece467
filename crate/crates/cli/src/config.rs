//! Run configuration: built-in defaults, then a `key = value` file, then
//! command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use clap::Args;
use flowexec::horizon::RebalanceSchedule;
use flowexec::myopic::InventoryRisk;
use flowexec::ou_flow::FlowParams;
use flowexec::simulation::{SimConfig, DEFAULT_DT};
use serde::Serialize;

/// Invalid configuration; exits with its own code.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Every setting shared across subcommands. Defaults are the six-strategy
/// comparison: constant risk 0.1, three units, balanced flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub beta: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub eta: f64,
    /// zero | quadratic | linear | constant
    pub risk: String,
    pub c: f64,
    pub x0: f64,
    pub y0: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    pub terminal_cost: bool,
    /// `continuous` or `fraction:<k>`
    pub rebalance: String,
}

impl Default for Config {
    fn default() -> Self {
        let p = FlowParams::table1();
        Config {
            beta: p.beta,
            sigma: p.sigma,
            kappa: p.kappa,
            eta: p.eta,
            risk: "constant".into(),
            c: 0.1,
            x0: 3.0,
            y0: 0.0,
            dt: DEFAULT_DT,
            paths: 2000,
            seed: 7,
            terminal_cost: false,
            rebalance: "continuous".into(),
        }
    }
}

/// Flags that override the configuration file.
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Overrides {
    /// Path to a `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,
    /// Imbalance mean reversion.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Imbalance volatility.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Informational cost weight.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    /// Leakage of own trading into the flow.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    /// Inventory risk form: zero, quadratic, linear or constant.
    #[arg(long, global = true)]
    pub risk: Option<String>,
    /// Inventory risk coefficient.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Initial inventory.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    /// Initial imbalance.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub y0: Option<f64>,
    /// Simulation time step.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// Monte Carlo paths.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Charge the informational cost once at the close instead of
    /// continuously.
    #[arg(long, global = true)]
    pub terminal_cost: Option<bool>,
    /// `continuous` or `fraction:<k>`.
    #[arg(long, global = true)]
    pub rebalance: Option<String>,
}

/// Parses `key = value` lines; `#` starts a comment, dashes in keys are
/// read as underscores.
pub fn parse_kv(text: &str, origin: &str) -> anyhow::Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("{origin}:{}: expected key = value", n + 1)))?;
        let key = k.trim().replace('-', "_");
        if out.insert(key.clone(), (n + 1, v.trim().to_string())).is_some() {
            return Err(bad(format!("{origin}:{}: duplicate key {key}", n + 1)));
        }
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(origin: &str, line: usize, key: &str, v: &str) -> anyhow::Result<T>
where
    T::Err: fmt::Display,
{
    v.parse()
        .map_err(|e| bad(format!("{origin}:{line}: bad value {v:?} for {key}: {e}")))
}

impl Config {
    /// Defaults, then the file named by `--config`, then flags.
    pub fn resolve(ov: &Overrides) -> anyhow::Result<Config> {
        let mut cfg = Config::default();
        if let Some(path) = &ov.config {
            cfg.apply_file(path)?;
        }
        cfg.apply(ov);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_file(&mut self, path: &Path) -> anyhow::Result<()> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {origin}: {e}")))?;
        for (key, (line, v)) in parse_kv(&text, &origin)? {
            let o = origin.as_str();
            match key.as_str() {
                "beta" => self.beta = field(o, line, &key, &v)?,
                "sigma" => self.sigma = field(o, line, &key, &v)?,
                "kappa" => self.kappa = field(o, line, &key, &v)?,
                "eta" => self.eta = field(o, line, &key, &v)?,
                "risk" => self.risk = v,
                "c" => self.c = field(o, line, &key, &v)?,
                "x0" => self.x0 = field(o, line, &key, &v)?,
                "y0" => self.y0 = field(o, line, &key, &v)?,
                "dt" => self.dt = field(o, line, &key, &v)?,
                "paths" => self.paths = field(o, line, &key, &v)?,
                "seed" => self.seed = field(o, line, &key, &v)?,
                "terminal_cost" => self.terminal_cost = field(o, line, &key, &v)?,
                "rebalance" => self.rebalance = v,
                _ => return Err(bad(format!("{origin}:{line}: unknown key {key}"))),
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, ov: &Overrides) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = ov.$f.clone() { self.$f = v; } )* };
        }
        set!(beta, sigma, kappa, eta, risk, c, x0, y0, dt, paths, seed, terminal_cost, rebalance);
    }

    pub fn params(&self) -> FlowParams {
        FlowParams {
            beta: self.beta,
            sigma: self.sigma,
            kappa: self.kappa,
            eta: self.eta,
        }
    }

    pub fn inventory_risk(&self) -> anyhow::Result<InventoryRisk> {
        Ok(match self.risk.as_str() {
            "zero" => InventoryRisk::Zero,
            "quadratic" => InventoryRisk::Quadratic(self.c),
            "linear" => InventoryRisk::Linear(self.c),
            "constant" => InventoryRisk::Constant(self.c),
            other => return Err(bad(format!("unknown risk form {other:?}"))),
        })
    }

    pub fn schedule(&self) -> anyhow::Result<RebalanceSchedule> {
        match self.rebalance.as_str() {
            "continuous" => Ok(RebalanceSchedule::Continuous { dt: self.dt }),
            s => {
                let k = s
                    .strip_prefix("fraction:")
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| bad(format!("rebalance must be continuous or fraction:<k>, got {s:?}")))?;
                Ok(RebalanceSchedule::InventoryFraction { k })
            }
        }
    }

    pub fn sim(&self) -> anyhow::Result<SimConfig> {
        Ok(SimConfig {
            params: self.params(),
            risk: self.inventory_risk()?,
            x0: self.x0,
            y0: self.y0,
            dt: self.dt,
            terminal_cost: self.terminal_cost,
            rebalance: self.schedule()?,
        })
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let sim = self.sim()?;
        sim.validate().map_err(|e| bad(e.to_string()))?;
        if self.paths < flowexec::simulation::MIN_PATHS {
            return Err(bad(format!(
                "paths must be at least {}, got {}",
                flowexec::simulation::MIN_PATHS,
                self.paths
            )));
        }
        Ok(())
    }
}
