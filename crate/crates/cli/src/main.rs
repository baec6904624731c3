mod commands;
mod inputs;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use inputs::{load_curve, load_params, load_quotes, parse_list, parse_schedule};

#[derive(Parser)]
#[command(name = "repo-convexity", version, about = "Repo rates and convexity adjustments in a two-factor Hull-White model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Liquidity, maturity and forwardness adjustments for each schedule
    Adjust(AdjustArgs),
    /// Repo rates for each schedule
    Price(PriceArgs),
    /// Bond discount curve from spot-starting repo quotes
    Strip(StripArgs),
    /// Repo curve extended past its last observed pillar
    Extrapolate(ExtrapolateArgs),
    /// Closed forms against quadrature and Monte Carlo
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Output {
    /// Emit JSON instead of a table or CSV
    #[arg(long)]
    json: bool,
    /// Write to this file instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdjustArgs {
    /// JSON file with sigma, epsilon, theta, kappa, rho
    #[arg(long, value_name = "FILE")]
    params: PathBuf,
    /// Repo schedule t,s,e,T,delta (repeatable)
    #[arg(long = "schedule", value_name = "t,s,e,T,delta", required = true)]
    schedules: Vec<String>,
    /// Mean of the integrated liquidity basis
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    liquidity_mean: f64,
    /// Standard deviation of the integrated liquidity basis
    #[arg(long, default_value_t = 0.0)]
    liquidity_std: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PriceArgs {
    #[arg(long, value_name = "FILE")]
    params: PathBuf,
    /// Bond curve CSV with header `time,df`
    #[arg(long, value_name = "FILE")]
    bond_curve: PathBuf,
    #[arg(long = "schedule", value_name = "t,s,e,T,delta", required = true)]
    schedules: Vec<String>,
    /// Valuation time of the curve files
    #[arg(long, default_value_t = 0.0)]
    valuation_time: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct StripArgs {
    /// Quote CSV with header `start,end,rate,accrual`
    #[arg(long, value_name = "FILE")]
    quotes: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    valuation_time: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ExtrapolateArgs {
    #[arg(long, value_name = "FILE")]
    params: PathBuf,
    #[arg(long, value_name = "FILE")]
    bond_curve: PathBuf,
    /// Observed repo curve CSV; its last pillar is the extrapolation horizon
    #[arg(long, value_name = "FILE")]
    repo_curve: PathBuf,
    /// Comma-separated output pillar times
    #[arg(long, value_name = "T1,T2,...")]
    pillars: String,
    /// Repo-minus-bond forward basis at the horizon, instead of the observed one
    #[arg(long, allow_negative_numbers = true)]
    horizon_basis: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    valuation_time: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    /// Single parameter set instead of the built-in grid
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Schedules instead of the built-in grid (repeatable)
    #[arg(long = "schedule", value_name = "t,s,e,T,delta")]
    schedules: Vec<String>,
    /// Bond curve for repo-rate rows; flat 2% by default
    #[arg(long, value_name = "FILE")]
    bond_curve: Option<PathBuf>,
    /// Derivative discount curve for repo-rate rows; flat 2.2% by default
    #[arg(long, value_name = "FILE")]
    derivative_curve: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    paths: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads for the simulation; 0 uses all cores
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    output: Output,
}

enum Outcome {
    Done,
    VerificationFailed,
}

fn schedules(texts: &[String]) -> Result<Vec<repo_convexity::RepoSchedule>> {
    texts.iter().map(|s| parse_schedule(s)).collect()
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Adjust(a) => {
            let params = load_params(&a.params)?;
            let text = commands::adjust(
                &params,
                &schedules(&a.schedules)?,
                a.liquidity_mean,
                a.liquidity_std,
                a.output.json,
            )?;
            report::emit(&text, a.output.out.as_deref())?;
        }
        Command::Price(a) => {
            let params = load_params(&a.params)?;
            let bond = load_curve(&a.bond_curve, a.valuation_time)?;
            let text = commands::price(&params, bond, &schedules(&a.schedules)?, a.output.json)?;
            report::emit(&text, a.output.out.as_deref())?;
        }
        Command::Strip(a) => {
            let quotes = load_quotes(&a.quotes)?;
            let text = commands::strip(a.valuation_time, &quotes, a.output.json)?;
            report::emit(&text, a.output.out.as_deref())?;
        }
        Command::Extrapolate(a) => {
            let params = load_params(&a.params)?;
            let bond = load_curve(&a.bond_curve, a.valuation_time)?;
            let observed = load_curve(&a.repo_curve, a.valuation_time)?;
            let pillars = parse_list(&a.pillars).context("--pillars")?;
            let text = commands::extrapolate(&params, bond, observed, &pillars, a.horizon_basis, a.output.json)?;
            report::emit(&text, a.output.out.as_deref())?;
        }
        Command::Verify(a) => {
            let inputs = verify::VerifyInputs {
                params: match &a.params {
                    Some(p) => vec![load_params(p)?],
                    None => verify::default_params(),
                },
                schedules: if a.schedules.is_empty() {
                    verify::default_schedules()
                } else {
                    schedules(&a.schedules)?
                },
                bond_curve: match &a.bond_curve {
                    Some(p) => load_curve(p, 0.0)?,
                    None => verify::flat_curve(0.02),
                },
                derivative_curve: match &a.derivative_curve {
                    Some(p) => load_curve(p, 0.0)?,
                    None => verify::flat_curve(0.022),
                },
                paths: a.paths,
                seed: a.seed,
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(a.threads)
                .build()
                .context("starting worker threads")?;
            let report = pool.install(|| verify::run(&inputs))?;
            let text = verify::render(&report, a.output.json)?;
            report::emit(&text, a.output.out.as_deref())?;
            if !report.passed() {
                return Ok(Outcome::VerificationFailed);
            }
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
