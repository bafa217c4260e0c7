use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use varpremia_cli::commands;
use varpremia_cli::config::RunConfig;
use varpremia_cli::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "varpremia", version, about = "GARCH-filter option pricing with variance, skew and kurtosis premia")]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pooled maximum-likelihood fit of the filter weights and lengths.
    Estimate,
    /// Filter values over a return series, plus the latest state.
    Filters,
    /// Forward variance and variance-swap term structure.
    Varswap,
    /// Model moment term structure, or with --market the replicated market moments.
    Moments {
        #[arg(long)]
        market: bool,
    },
    /// Sequential fit of the three premia to the option chains.
    Calibrate,
    /// Monte Carlo implied-vol smiles.
    Smile,
    /// Self-checks: real-world drift, identities, martingale, determinism.
    Validate,
    /// Print the effective configuration.
    Config,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    log::info!("config sha256 {}", cfg.hash());
    let written = match cli.command {
        Command::Estimate => commands::estimate(&cfg)?,
        Command::Filters => commands::filters(&cfg)?,
        Command::Varswap => commands::varswap(&cfg)?,
        Command::Moments { market } => commands::moments(&cfg, market)?,
        Command::Calibrate => commands::calibrate(&cfg)?,
        Command::Smile => commands::smile(&cfg)?,
        Command::Validate => {
            let (written, ok) = commands::validate(&cfg)?;
            for p in &written {
                println!("{}", p.display());
            }
            if !ok {
                return Err(CliError::Numerical("validation checks failed, see validate.json".into()));
            }
            return Ok(());
        }
        Command::Config => {
            println!("{}", cfg.to_json());
            return Ok(());
        }
    };
    for p in &written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("varpremia: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
