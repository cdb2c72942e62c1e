//! Command-line front end: analytic transforms, moments, Monte Carlo
//! estimates, the Gaussian-limit experiment, the ordering problem, and the
//! invariant suite, all driven by a JSON config file.
//!
//! Outputs are CSV (17 significant digits, LF endings) or JSON and are
//! byte-reproducible for a fixed config and seed, independent of the
//! worker count (`LEVYAREA_THREADS`, 0 or unset = auto).
//!
//! Exit codes: 0 success, 1 verification/runtime failure, 2 config or
//! usage error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use levyarea::area;
use levyarea::inventory::{multiclass_linear, CostModel, OrderDecision};
use levyarea::sim::{self, EstimateRequest};
use levyarea::verify;
use levyarea::{HoldingFunction, LaplaceExponent, ProcessSpec};

/// Analysis of areas under reflected spectrally-positive Levy processes
/// with secondary jump inputs.
#[derive(Parser)]
#[command(name = "levyarea", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON config file with the process spec and holding function.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate phi and phi' on an alpha grid, plus derivatives at zero.
    Exponent {
        #[command(flatten)]
        config: ConfigArg,
        /// Grid `start:stop:count` (inclusive endpoints).
        #[arg(long)]
        alpha_grid: String,
    },
    /// Laplace-Stieltjes transform of the area A_x on an alpha grid.
    Lst {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        alpha_grid: String,
        /// Add Monte Carlo estimates and standard errors.
        #[arg(long)]
        with_sim: bool,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Euler step for specs with a Brownian component.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Coefficients c_k and raw moments mu_k of A_x.
    Moments {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 6)]
        n: usize,
    },
    /// Monte Carlo estimates of A_x and T_x statistics.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional alpha grid for Monte Carlo transform estimates.
        #[arg(long)]
        alpha_grid: Option<String>,
        /// Stream raw per-replication samples to this CSV file.
        #[arg(long)]
        raw: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Regenerative long-run average of h(W^x - W).
    Longrun {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Gaussian-limit experiment: standardized samples of A_{n x}.
    Clt {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 200)]
        scale: u64,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Optimal order size, cost, and break-even penalty.
    Inventory {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Run the full cross-oracle invariant suite.
    Verify {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    process: ProcessSpec,
    #[serde(default)]
    holding: Option<HoldingFunction>,
    #[serde(default)]
    inventory: Option<InventoryConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InventoryConfig {
    setup_cost: f64,
    #[serde(default)]
    reward: f64,
    #[serde(default)]
    class_costs: Vec<f64>,
}

enum CliError {
    /// Bad config file, schema violation, or malformed argument value.
    Config(String),
    /// Legitimate run that failed (verification failure, solver failure).
    Run(String),
}

type CliResult<T> = Result<T, CliError>;

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn run_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Run(e.to_string())
}

fn load_config(path: &PathBuf) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config schema error: {e}")))?;
    cfg.process.validate().map_err(config_err)?;
    if let Some(h) = &cfg.holding {
        h.validate().map_err(config_err)?;
    }
    Ok(cfg)
}

fn require_holding(cfg: &RunConfig) -> CliResult<&HoldingFunction> {
    cfg.holding
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs a \"holding\" entry in the config".into()))
}

/// Inclusive grid `start:stop:count`; `count = 1` keeps just `start`.
fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!("grid must be start:stop:count, got {s:?}")));
    }
    let start: f64 = parts[0].parse().map_err(config_err)?;
    let stop: f64 = parts[1].parse().map_err(config_err)?;
    let count: usize = parts[2].parse().map_err(config_err)?;
    if count == 0 {
        return Err(CliError::Config("grid count must be >= 1".into()));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|k| start + (stop - start) * k as f64 / (count - 1) as f64)
        .collect())
}

/// Full double precision: 17 significant digits.
fn fnum(v: f64) -> String {
    format!("{v:.16e}")
}

fn build_exponent(cfg: &RunConfig) -> CliResult<LaplaceExponent> {
    LaplaceExponent::build(cfg.process.clone(), 12).map_err(config_err)
}

fn cmd_exponent(cfg: &RunConfig, grid: &str) -> CliResult<String> {
    let exp = build_exponent(cfg)?;
    let grid = parse_grid(grid)?;
    let mut out = String::new();
    out.push_str("# n,phi_deriv0\n");
    for (i, d) in exp.deriv0().iter().enumerate() {
        let _ = writeln!(out, "# {},{}", i + 1, fnum(*d));
    }
    out.push_str("alpha,phi,phi_prime\n");
    for a in grid {
        let phi = exp.phi(a).map_err(run_err)?;
        let dphi = exp.phi_prime(a).map_err(run_err)?;
        let _ = writeln!(out, "{},{},{}", fnum(a), fnum(phi), fnum(dphi));
    }
    Ok(out)
}

fn require_dt_for_brownian(cfg: &RunConfig, dt: Option<f64>) -> CliResult<()> {
    if cfg.process.sigma2 > 0.0 && dt.is_none() {
        return Err(CliError::Config(
            "spec has a Brownian component; pass --dt for the Euler sampler".into(),
        ));
    }
    Ok(())
}

fn cmd_lst(
    cfg: &RunConfig,
    x: f64,
    grid: &str,
    with_sim: bool,
    reps: u64,
    seed: u64,
    dt: Option<f64>,
) -> CliResult<String> {
    let exp = build_exponent(cfg)?;
    let h = require_holding(cfg)?;
    if with_sim {
        require_dt_for_brownian(cfg, dt)?;
    }
    let grid = parse_grid(grid)?;
    let mut out = String::new();
    if with_sim {
        let req = EstimateRequest { n_reps: reps, seed, alpha_grid: grid.clone(), dt, ..Default::default() };
        let set = sim::estimate(&exp, h, x, &req).map_err(run_err)?;
        out.push_str("alpha,lst,mc_lst,mc_se\n");
        for (a, mc) in grid.iter().zip(&set.lst) {
            let v = area::lst_area(&exp, h, x, *a).map_err(run_err)?;
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fnum(*a),
                fnum(v),
                fnum(mc.estimate.value),
                fnum(mc.estimate.std_error)
            );
        }
    } else {
        out.push_str("alpha,lst\n");
        for a in grid {
            let v = area::lst_area(&exp, h, x, a).map_err(run_err)?;
            let _ = writeln!(out, "{},{}", fnum(a), fnum(v));
        }
    }
    Ok(out)
}

fn cmd_moments(cfg: &RunConfig, x: f64, n: usize) -> CliResult<String> {
    let exp = build_exponent(cfg)?;
    let h = require_holding(cfg)?;
    let table = area::moments_area(&exp, h, x, n).map_err(run_err)?;
    let mut out = String::from("k,c_k,mu_k\n");
    let _ = writeln!(out, "0,{},{}", fnum(0.0), fnum(1.0));
    for k in 1..=n {
        let _ = writeln!(out, "{k},{},{}", fnum(table.c[k - 1]), fnum(table.mu[k]));
    }
    Ok(out)
}

fn cmd_simulate(
    cfg: &RunConfig,
    x: f64,
    reps: u64,
    seed: u64,
    alpha_grid: Option<&str>,
    raw: Option<&PathBuf>,
    dt: Option<f64>,
) -> CliResult<String> {
    let exp = build_exponent(cfg)?;
    let h = require_holding(cfg)?;
    require_dt_for_brownian(cfg, dt)?;
    let grid = match alpha_grid {
        Some(g) => parse_grid(g)?,
        None => Vec::new(),
    };
    let req = EstimateRequest { n_reps: reps, seed, alpha_grid: grid, dt, ..Default::default() };
    let (mut set, samples) = sim::estimate_with_samples(&exp, h, x, &req).map_err(run_err)?;
    for point in &mut set.lst {
        set_analytic(point, &exp, h, x)?;
    }
    if let Some(path) = raw {
        let mut csv = String::from("rep,T_x,area\n");
        for (i, s) in samples.iter().enumerate() {
            let _ = writeln!(csv, "{i},{},{}", fnum(s.hitting), fnum(s.area));
        }
        std::fs::write(path, csv)
            .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
    }
    serde_json::to_string_pretty(&set).map_err(run_err)
}

fn set_analytic(
    point: &mut sim::LstEstimate,
    exp: &LaplaceExponent,
    h: &HoldingFunction,
    x: f64,
) -> CliResult<()> {
    point.analytic = Some(area::lst_area(exp, h, x, point.alpha).map_err(run_err)?);
    Ok(())
}

fn cmd_longrun(cfg: &RunConfig, x: f64, horizon: f64, seed: u64) -> CliResult<String> {
    let exp = build_exponent(cfg)?;
    let h = require_holding(cfg)?;
    let lr = sim::longrun_experiment(&exp, h, x, horizon, seed).map_err(run_err)?;
    serde_json::to_string_pretty(&lr).map_err(run_err)
}

fn cmd_clt(cfg: &RunConfig, x: f64, scale: u64, reps: u64, seed: u64) -> CliResult<String> {
    let exp = build_exponent(cfg)?;
    let h = require_holding(cfg)?;
    let report = sim::clt_experiment(&exp, h, x, scale, reps, seed).map_err(run_err)?;
    serde_json::to_string_pretty(&report).map_err(run_err)
}

#[derive(serde::Serialize)]
struct InventoryOutput {
    x_star: Option<f64>,
    cost: Option<f64>,
    bounded: bool,
    p_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    search_cap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    multiclass: Option<MulticlassOutput>,
}

#[derive(serde::Serialize)]
struct MulticlassOutput {
    x: f64,
    proportions: Vec<f64>,
    objective: f64,
}

fn cmd_inventory(cfg: &RunConfig) -> CliResult<String> {
    let exp = build_exponent(cfg)?;
    let h = require_holding(cfg)?;
    let inv = cfg
        .inventory
        .as_ref()
        .ok_or_else(|| CliError::Config("inventory command needs an \"inventory\" config entry".into()))?;
    let cm = CostModel::new(inv.setup_cost, h.clone(), &exp, inv.reward).map_err(config_err)?;
    let mut out = match cm.optimal_order().map_err(run_err)? {
        OrderDecision::Bounded { x_star, cost } => InventoryOutput {
            x_star: Some(x_star),
            cost: Some(cost),
            bounded: true,
            p_star: Some(cm.break_even_penalty().map_err(run_err)?),
            search_cap: None,
            multiclass: None,
        },
        OrderDecision::Unbounded { cap } => InventoryOutput {
            x_star: None,
            cost: None,
            bounded: false,
            p_star: None,
            search_cap: Some(cap),
            multiclass: None,
        },
    };
    if !inv.class_costs.is_empty() {
        let sol = multiclass_linear(&inv.class_costs, inv.setup_cost, exp.phi_prime0())
            .map_err(run_err)?;
        out.multiclass = Some(MulticlassOutput {
            x: sol.x,
            proportions: sol.proportions,
            objective: sol.objective,
        });
    }
    serde_json::to_string_pretty(&out).map_err(run_err)
}

fn cmd_verify(cfg: &RunConfig, seed: u64) -> CliResult<(String, bool)> {
    let h = require_holding(cfg)?;
    let report = verify::run_all(&cfg.process, h, seed).map_err(run_err)?;
    let mut out = String::new();
    for c in &report.checks {
        let _ = writeln!(out, "{} {} - {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let _ = writeln!(
        out,
        "{}: {} checks, {} failed",
        if report.all_pass() { "OK" } else { "FAILED" },
        report.checks.len(),
        report.failures()
    );
    Ok((out, report.all_pass()))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Exponent { config, alpha_grid } => {
            let cfg = load_config(&config.config)?;
            print!("{}", cmd_exponent(&cfg, &alpha_grid)?);
        }
        Command::Lst { config, x, alpha_grid, with_sim, reps, seed, dt } => {
            let cfg = load_config(&config.config)?;
            print!("{}", cmd_lst(&cfg, x, &alpha_grid, with_sim, reps, seed, dt)?);
        }
        Command::Moments { config, x, n } => {
            let cfg = load_config(&config.config)?;
            print!("{}", cmd_moments(&cfg, x, n)?);
        }
        Command::Simulate { config, x, reps, seed, alpha_grid, raw, dt } => {
            let cfg = load_config(&config.config)?;
            println!("{}", cmd_simulate(&cfg, x, reps, seed, alpha_grid.as_deref(), raw.as_ref(), dt)?);
        }
        Command::Longrun { config, x, horizon, seed } => {
            let cfg = load_config(&config.config)?;
            println!("{}", cmd_longrun(&cfg, x, horizon, seed)?);
        }
        Command::Clt { config, x, scale, reps, seed } => {
            let cfg = load_config(&config.config)?;
            println!("{}", cmd_clt(&cfg, x, scale, reps, seed)?);
        }
        Command::Inventory { config } => {
            let cfg = load_config(&config.config)?;
            println!("{}", cmd_inventory(&cfg)?);
        }
        Command::Verify { config, seed } => {
            let cfg = load_config(&config.config)?;
            let (out, pass) = cmd_verify(&cfg, seed)?;
            print!("{out}");
            if !pass {
                return Err(CliError::Run("verification failed".into()));
            }
        }
    }
    Ok(())
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("LEVYAREA_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                // ignore the error if a pool already exists
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
