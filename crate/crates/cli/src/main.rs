//! `olps`: backtest online portfolio selection strategies from the command
//! line.
//!
//! Exit codes: 0 on success, 1 for invalid flags, parameters or
//! configuration, 2 for unreadable or malformed data.

mod commands;
mod config;
mod error;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use olps_core::{InputKind, StrategyKind, StrategySpec, TableFormat};

use crate::commands::{RunPlan, Settings};
use crate::config::ConfigFile;
use crate::error::CliError;
use crate::source::Source;

#[derive(Parser)]
#[command(
    name = "olps",
    version,
    about = "Backtest online portfolio selection strategies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (dataset, strategy, gamma) combination and tabulate final wealth.
    Run(RunArgs),
    /// Summarise datasets: period, size and extreme price relatives.
    Describe(CommonArgs),
    /// Sort a universe by ticker and cut it into equal-sized groups.
    Split(SplitArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Dataset CSV, or synth:<alternating|random-walk|mean-reverting>[:<days>x<assets>]. Repeatable.
    #[arg(long, value_name = "PATH")]
    data: Vec<String>,
    /// What the numeric cells hold: prices (default) or relatives.
    #[arg(long, value_name = "KIND")]
    input_kind: Option<String>,
    /// Table format: csv (default) or markdown.
    #[arg(long)]
    format: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for synthetic datasets.
    #[arg(long)]
    seed: Option<u64>,
    /// key = value file mirroring these flags; flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated strategy names, or "all" (default).
    #[arg(long)]
    strategy: Option<String>,
    /// Comma-separated cost rates in [0, 1]. Default 0.
    #[arg(long)]
    gamma: Option<String>,
    /// PAMR return cap / OLMAR return target.
    #[arg(long)]
    epsilon: Option<String>,
    /// Moving-average window for SMAR and OLMAR.
    #[arg(long)]
    window: Option<String>,
    /// TCO step size.
    #[arg(long)]
    eta: Option<String>,
    /// TCO-2: divide the moving average by today's relatives rather than prices.
    #[arg(long)]
    tco2_literal_eq10: bool,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    threads: Option<String>,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of groups.
    #[arg(long, short = 'k')]
    groups: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(args) => {
            let config = load_config(&args.common)?;
            let settings = settings(&args.common, &config)?;
            let plan = run_plan(&args, &config)?;
            commands::run(&settings, &plan)
        }
        Command::Describe(args) => {
            let config = load_config(&args)?;
            commands::describe(&settings(&args, &config)?)
        }
        Command::Split(args) => {
            let config = load_config(&args.common)?;
            let settings = settings(&args.common, &config)?;
            let groups = pick(args.groups, &config, "groups")?
                .ok_or_else(|| CliError::Validation("split needs --groups".into()))?;
            commands::split(&settings, groups)
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<ConfigFile, CliError> {
    match &common.config {
        Some(path) => ConfigFile::load(path),
        None => Ok(ConfigFile::default()),
    }
}

/// The flag value if given, else the config value, parsed as `T`.
fn pick<T>(flag: Option<String>, config: &ConfigFile, key: &str) -> Result<Option<T>, CliError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let Some(raw) = flag.or_else(|| config.get(key).map(str::to_owned)) else {
        return Ok(None);
    };
    raw.trim()
        .parse()
        .map(Some)
        .map_err(|e| CliError::Validation(format!("invalid --{key} {raw:?}: {e}")))
}

fn settings(common: &CommonArgs, config: &ConfigFile) -> Result<Settings, CliError> {
    let seed = pick(common.seed.map(|s| s.to_string()), config, "seed")?.unwrap_or(0);
    let raw = if common.data.is_empty() {
        &config.data
    } else {
        &common.data
    };
    let data = raw
        .iter()
        .map(|d| Source::parse(d, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let out = common
        .out
        .clone()
        .or_else(|| config.get("out").map(PathBuf::from));
    Ok(Settings {
        data,
        input_kind: pick::<InputKind>(common.input_kind.clone(), config, "input-kind")?
            .unwrap_or_default(),
        format: pick::<TableFormat>(common.format.clone(), config, "format")?.unwrap_or_default(),
        out,
        seed,
    })
}

fn run_plan(args: &RunArgs, config: &ConfigFile) -> Result<RunPlan, CliError> {
    let names = pick::<String>(args.strategy.clone(), config, "strategy")?
        .unwrap_or_else(|| "all".to_owned());
    let kinds = parse_strategies(&names)?;

    let gammas = pick::<String>(args.gamma.clone(), config, "gamma")?.unwrap_or_else(|| "0".into());
    let gammas = parse_list::<f64>(&gammas, "gamma")?;
    for &g in &gammas {
        if !(0.0..=1.0).contains(&g) {
            return Err(CliError::Validation(format!("gamma {g} is outside [0, 1]")));
        }
    }

    let epsilon: Option<f64> = pick(args.epsilon.clone(), config, "epsilon")?;
    let window: Option<usize> = pick(args.window.clone(), config, "window")?;
    let eta: Option<f64> = pick(args.eta.clone(), config, "eta")?;
    let literal =
        args.tco2_literal_eq10 || pick::<bool>(None, config, "tco2-literal-eq10")?.unwrap_or(false);
    let specs = kinds
        .into_iter()
        .map(|kind| {
            let mut spec = StrategySpec::new(kind);
            if let Some(e) = epsilon {
                spec.epsilon = e;
            }
            if let Some(w) = window {
                spec.window = w;
            }
            if let Some(e) = eta {
                spec.eta = e;
            }
            spec.tco2_divide_by_relatives = literal;
            spec.validate()?;
            Ok(spec)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let threads = pick::<usize>(args.threads.clone(), config, "threads")?;
    if threads == Some(0) {
        return Err(CliError::Validation("threads must be at least 1".into()));
    }
    Ok(RunPlan {
        specs,
        gammas,
        threads,
    })
}

fn parse_strategies(list: &str) -> Result<Vec<StrategyKind>, CliError> {
    let mut kinds = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name.eq_ignore_ascii_case("all") {
            kinds.extend(StrategyKind::ALL);
        } else {
            kinds.push(name.parse::<StrategyKind>()?);
        }
    }
    let mut seen = Vec::new();
    kinds.retain(|k| {
        let fresh = !seen.contains(k);
        seen.push(*k);
        fresh
    });
    if kinds.is_empty() {
        return Err(CliError::Validation("no strategies selected".into()));
    }
    Ok(kinds)
}

fn parse_list<T>(list: &str, key: &str) -> Result<Vec<T>, CliError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|e| CliError::Validation(format!("invalid {key} {s:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(CliError::Validation(format!("empty {key} list")));
    }
    Ok(items)
}
