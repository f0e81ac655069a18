//! `ou-pairs`: thresholds, frontiers, misspecification tables, simulation
//! checks and parameter estimation from the command line.
//!
//! Exit status is 0 on success, 1 for invalid input and 2 for numerical
//! failures. Diagnostics go to standard error as a single line.

mod table;

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ou_pairs_core::cycle_stats::cycle_stats;
use ou_pairs_core::ingest::{build_spread, estimate_eta, estimate_ou, load_csv};
use ou_pairs_core::misspec::{analyze, frontier_comparison, ComparisonRow, BENCHMARK_COST};
use ou_pairs_core::optimizer::{
    efficient_frontier_from, maximize_unconstrained, solve_risk_constrained_from, DEFAULT_EPS,
    DEFAULT_TOL,
};
use ou_pairs_core::ou_model::{
    destandardize_performance, destandardize_strategy, standardize_cost, standardize_variance_rate,
};
use ou_pairs_core::simulator::{estimate_cycle_stats, estimate_profit_statistics};
use ou_pairs_core::strategy_eval::evaluate;
use ou_pairs_core::{
    CostedStrategy, Error, MisspecScenario, OUParams, OptResult, Performance, RiskBound, SimConfig,
    Strategy,
};

use table::{Cell, Format, Table};

const THREADS_ENV: &str = "OU_PAIRS_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "ou-pairs",
    version,
    about = "Pairs-trading thresholds for an Ornstein-Uhlenbeck spread"
)]
struct Cli {
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format (default: csv, json for `estimate`).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal symmetric thresholds, optionally under a variance-rate bound.
    #[command(allow_negative_numbers = true)]
    Optimize(OptimizeArgs),
    /// Efficient frontier sampled along symmetric strategies.
    #[command(allow_negative_numbers = true)]
    Frontier(FrontierArgs),
    /// Believed versus realized frontier under misspecified parameters.
    #[command(allow_negative_numbers = true)]
    Misspec(MisspecArgs),
    /// Analytic versus simulated profit statistics of a strategy.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Fit OU parameters to a price-pair CSV (`s,A,B`).
    #[command(allow_negative_numbers = true)]
    Estimate(EstimateArgs),
}

/// Optional general parametrization; absent means standardized units.
#[derive(Args, Debug)]
struct GeneralArgs {
    #[arg(long, requires_all = ["tau", "sigma2"], value_parser = finite)]
    mu: Option<f64>,
    #[arg(long, requires_all = ["mu", "sigma2"], value_parser = positive)]
    tau: Option<f64>,
    #[arg(long, requires_all = ["mu", "tau"], value_parser = positive)]
    sigma2: Option<f64>,
}

impl GeneralArgs {
    fn params(&self) -> Result<Option<OUParams>, Error> {
        match (self.mu, self.tau, self.sigma2) {
            (Some(mu), Some(tau), Some(sigma2)) => OUParams::new(mu, tau, sigma2).map(Some),
            _ => Ok(None),
        }
    }
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    /// Round-trip transaction cost (price units when general parameters are given).
    #[arg(long, value_parser = positive)]
    cost: f64,
    /// Variance-rate bound (price units when general parameters are given).
    #[arg(long, value_parser = positive)]
    v0: Option<f64>,
    /// Tolerance on |V - v0| for an active bound.
    #[arg(long, default_value_t = DEFAULT_EPS, value_parser = positive)]
    eps: f64,
    #[command(flatten)]
    general: GeneralArgs,
}

#[derive(Args, Debug)]
struct FrontierArgs {
    #[arg(long, value_parser = positive)]
    cost: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(2..))]
    points: u64,
    #[command(flatten)]
    general: GeneralArgs,
}

#[derive(Args, Debug)]
struct MisspecArgs {
    #[arg(long, default_value_t = 1.0, value_parser = finite)]
    true_mu: f64,
    #[arg(long, default_value_t = 10.0, value_parser = positive)]
    true_tau: f64,
    #[arg(long, default_value_t = 1e-4, value_parser = positive)]
    true_sigma2: f64,
    /// Defaults to the true value.
    #[arg(long, value_parser = finite)]
    believed_mu: Option<f64>,
    #[arg(long, value_parser = positive)]
    believed_tau: Option<f64>,
    #[arg(long, value_parser = positive)]
    believed_sigma2: Option<f64>,
    #[arg(long, default_value_t = BENCHMARK_COST, value_parser = positive)]
    cost_general: f64,
    /// Analyze a single bound instead of sweeping the believed frontier.
    #[arg(long, value_parser = positive)]
    v0_general: Option<f64>,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(2..))]
    points: u64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_parser = finite)]
    a: f64,
    #[arg(long, value_parser = finite)]
    b: f64,
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    cost: f64,
    /// Horizon per replication (default: 200 mean cycle times).
    #[arg(long, value_parser = positive)]
    horizon: Option<f64>,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(2..))]
    reps: u64,
    /// Largest simulation step in standardized time.
    #[arg(long, default_value_t = SimConfig::default().dt, value_parser = positive)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also simulate this many complete cycles for E[T] and var T.
    #[arg(long, default_value_t = 0)]
    cycles: u64,
    /// Step budget for a single cycle.
    #[arg(long, default_value_t = SimConfig::default().max_steps_per_cycle, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Cointegration coefficient (default 1).
    #[arg(long, conflicts_with = "fit_eta", value_parser = finite)]
    eta: Option<f64>,
    /// Estimate eta by least squares of A on B.
    #[arg(long)]
    fit_eta: bool,
    /// Build the spread from log prices.
    #[arg(long)]
    log_prices: bool,
}

fn finite(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err("must be a finite number".into()),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match finite(s) {
        Ok(x) if x > 0.0 => Ok(x),
        _ => Err("must be a finite positive number".into()),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match finite(s) {
        Ok(x) if x >= 0.0 => Ok(x),
        _ => Err("must be a finite non-negative number".into()),
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Parse { .. } | Error::Io(_) | Error::Degenerate(_) => 1,
            Error::Convergence(_) | Error::Bracketing(_) | Error::Budget { .. } => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::validation(e.to_string())
    }
}

/// Output plus an optional failure to report after it has been written.
struct Outcome {
    body: Vec<u8>,
    after: Option<Failure>,
}

fn render(table: &Table, format: Format) -> Result<Vec<u8>, Failure> {
    let mut body = Vec::new();
    table.write(&mut body, format)?;
    Ok(body)
}

fn solve(c: f64, v0: Option<f64>, eps: f64) -> Result<OptResult, Error> {
    let unconstrained = maximize_unconstrained(c, DEFAULT_TOL)?;
    match v0 {
        Some(v) => solve_risk_constrained_from(c, &unconstrained, RiskBound::new(v)?, eps),
        None => Ok(unconstrained),
    }
}

fn optimize(args: &OptimizeArgs, format: Format) -> Result<Outcome, Failure> {
    let general = args.general.params()?;
    let (c, v0) = match &general {
        Some(p) => (
            standardize_cost(p, args.cost)?,
            args.v0.map(|v| standardize_variance_rate(p, v)),
        ),
        None => (args.cost, args.v0),
    };
    let r = solve(c, v0, args.eps)?;
    let mut columns = vec![
        "a",
        "b",
        "profit_rate",
        "variance_rate",
        "constraint_active",
        "residual",
        "iterations",
        "monotonicity_fallback",
    ];
    let mut row: Vec<Cell> = vec![
        r.strategy.a().into(),
        r.strategy.b().into(),
        r.performance.profit_rate.into(),
        r.performance.variance_rate.into(),
        r.constraint_active.into(),
        r.residual.into(),
        r.iterations.into(),
        r.monotonicity_fallback.into(),
    ];
    if let Some(p) = &general {
        let g = destandardize_strategy(p, &r.strategy);
        let perf = destandardize_performance(p, &r.performance);
        columns.extend([
            "a_tilde",
            "b_tilde",
            "profit_rate_general",
            "variance_rate_general",
        ]);
        row.extend([
            g.a_tilde.into(),
            g.b_tilde.into(),
            perf.profit_rate.into(),
            perf.variance_rate.into(),
        ]);
    }
    let mut table = Table::new(columns);
    table.push(row);
    let after = r.monotonicity_fallback.then(|| Failure {
        code: 2,
        message:
            "variance rate not monotone on the search interval; result taken from grid fallback"
                .into(),
    });
    Ok(Outcome {
        body: render(&table, format)?,
        after,
    })
}

fn frontier(args: &FrontierArgs, format: Format) -> Result<Outcome, Failure> {
    let general = args.general.params()?;
    let c = match &general {
        Some(p) => standardize_cost(p, args.cost)?,
        None => args.cost,
    };
    let unconstrained = maximize_unconstrained(c, DEFAULT_TOL)?;
    let points = efficient_frontier_from(c, &unconstrained, args.points as usize)?;
    let mut columns = vec!["a", "variance_rate", "profit_rate"];
    if general.is_some() {
        columns.extend([
            "a_tilde",
            "b_tilde",
            "variance_rate_general",
            "profit_rate_general",
        ]);
    }
    let mut table = Table::new(columns);
    for pt in points {
        let mut row: Vec<Cell> = vec![pt.a.into(), pt.variance_rate.into(), pt.profit_rate.into()];
        if let Some(p) = &general {
            let g = destandardize_strategy(p, &Strategy::symmetric(pt.a)?);
            let perf = destandardize_performance(
                p,
                &Performance {
                    profit_rate: pt.profit_rate,
                    variance_rate: pt.variance_rate,
                },
            );
            row.extend([
                g.a_tilde.into(),
                g.b_tilde.into(),
                perf.variance_rate.into(),
                perf.profit_rate.into(),
            ]);
        }
        table.push(row);
    }
    Ok(Outcome {
        body: render(&table, format)?,
        after: None,
    })
}

fn misspec(args: &MisspecArgs, format: Format) -> Result<Outcome, Failure> {
    let truth = OUParams::new(args.true_mu, args.true_tau, args.true_sigma2)?;
    let believed = OUParams::new(
        args.believed_mu.unwrap_or(truth.mu),
        args.believed_tau.unwrap_or(truth.tau),
        args.believed_sigma2.unwrap_or(truth.sigma2),
    )?;
    let scenario = MisspecScenario::new(truth, believed, args.cost_general, args.v0_general)?;
    if args.v0_general.is_some() {
        let o = analyze(&scenario)?;
        let mut table = Table::new(vec![
            "a_tilde",
            "b_tilde",
            "believed_V",
            "believed_Pi",
            "realized_V",
            "realized_Pi",
            "realized_feasible",
            "constraint_active",
        ]);
        table.push(vec![
            o.believed_strategy.a_tilde.into(),
            o.believed_strategy.b_tilde.into(),
            o.believed_perf.variance_rate.into(),
            o.believed_perf.profit_rate.into(),
            o.realized_perf.variance_rate.into(),
            o.realized_perf.profit_rate.into(),
            o.realized_feasible.into(),
            o.constraint_active.into(),
        ]);
        let after = o.monotonicity_fallback.then(|| Failure {
            code: 2,
            message: "variance rate not monotone in the believed frame; grid fallback used".into(),
        });
        return Ok(Outcome {
            body: render(&table, format)?,
            after,
        });
    }
    let rows = frontier_comparison(&scenario, args.points as usize)?;
    let mut table = Table::new(ComparisonRow::HEADER.to_vec());
    for r in rows {
        table.push(vec![
            r.v0_general.into(),
            r.believed_v.into(),
            r.believed_pi.into(),
            r.realized_v.into(),
            r.realized_pi.into(),
        ]);
    }
    Ok(Outcome {
        body: render(&table, format)?,
        after: None,
    })
}

fn simulate(args: &SimulateArgs, format: Format) -> Result<Outcome, Failure> {
    let strategy = Strategy::new(args.a, args.b)?;
    let cs = CostedStrategy::new(strategy, args.cost)?;
    let stats = cycle_stats(&strategy)?;
    let analytic = evaluate(&cs)?;
    let cfg = SimConfig {
        dt: args.dt,
        seed: args.seed,
        max_steps_per_cycle: args.max_steps,
        ..SimConfig::default()
    };
    let horizon = args.horizon.unwrap_or(200.0 * stats.mean_t);
    let est = estimate_profit_statistics(&cs, horizon, args.reps as usize, &cfg)?;
    if est.short_horizon {
        eprintln!("warning: horizon {horizon} is shorter than 50 mean cycle times");
    }
    let mut table = Table::new(vec!["quantity", "analytic", "simulated", "stderr"]);
    table.push(vec![
        "profit_rate".into(),
        analytic.profit_rate.into(),
        est.mean_rate.into(),
        est.stderr_mean.into(),
    ]);
    table.push(vec![
        "variance_rate".into(),
        analytic.variance_rate.into(),
        est.var_rate.into(),
        est.stderr_var.into(),
    ]);
    if args.cycles > 0 {
        let c = estimate_cycle_stats(&strategy, &cfg, args.cycles as usize)?;
        table.push(vec![
            "mean_cycle_time".into(),
            stats.mean_t.into(),
            c.mean_t.into(),
            c.stderr_mean.into(),
        ]);
        table.push(vec![
            "cycle_time_variance".into(),
            stats.var_t.into(),
            c.var_t.into(),
            c.stderr_var.into(),
        ]);
    }
    Ok(Outcome {
        body: render(&table, format)?,
        after: None,
    })
}

fn estimate(args: &EstimateArgs, format: Format) -> Result<Outcome, Failure> {
    let series = load_csv(&args.input)?;
    let eta = if args.fit_eta {
        estimate_eta(&series, args.log_prices)?
    } else {
        args.eta.unwrap_or(1.0)
    };
    let spread = build_spread(&series, eta, args.log_prices)?;
    let est = estimate_ou(&spread, eta)?;
    let body = match format {
        Format::Json => {
            let mut body = serde_json::to_vec_pretty(&est).map_err(std::io::Error::other)?;
            body.push(b'\n');
            body
        }
        Format::Csv => {
            let mut table = Table::new(vec![
                "mu",
                "tau",
                "sigma2",
                "eta",
                "n_obs",
                "log_likelihood",
                "se_mu",
                "se_tau",
                "se_sigma2",
            ]);
            let se = |f: fn(&ou_pairs_core::StdErrors) -> f64| {
                est.std_errors.as_ref().map_or(f64::NAN, f).into()
            };
            table.push(vec![
                est.params.mu.into(),
                est.params.tau.into(),
                est.params.sigma2.into(),
                est.eta.into(),
                est.n_obs.into(),
                est.log_likelihood.into(),
                se(|s| s.mu),
                se(|s| s.tau),
                se(|s| s.sigma2),
            ]);
            render(&table, format)?
        }
    };
    Ok(Outcome { body, after: None })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        Failure::validation(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::validation(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> Result<Option<Failure>, Failure> {
    configure_threads()?;
    let default_format = match cli.command {
        Command::Estimate(_) => Format::Json,
        _ => Format::Csv,
    };
    let format = cli.format.unwrap_or(default_format);
    let outcome = match &cli.command {
        Command::Optimize(a) => optimize(a, format)?,
        Command::Frontier(a) => frontier(a, format)?,
        Command::Misspec(a) => misspec(a, format)?,
        Command::Simulate(a) => simulate(a, format)?,
        Command::Estimate(a) => estimate(a, format)?,
    };
    match &cli.output {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(&outcome.body))
            .map_err(|e| Failure::validation(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout().lock().write_all(&outcome.body)?,
    }
    Ok(outcome.after)
}

fn report(f: &Failure) -> ExitCode {
    eprintln!("error: {}", f.message.replace('\n', " "));
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let line: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more"))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("{}", line.join(" "));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(f)) | Err(f) => report(&f),
    }
}
