use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use amopt_cli::commands::{self, Context};
use amopt_cli::config::RunConfig;
use amopt_cli::error;

/// American option pricing and verification runs driven by one config file.
#[derive(Parser)]
#[command(name = "amopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the obstacle problem and print v(0, S0).
    Price(RunArgs),
    /// Solve, simulate and check the pathwise balance residuals.
    VerifyBalance(RunArgs),
    /// Exact campaign over random rational trees.
    SnellCheck(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [output] directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Regenerate the golden files named in [thresholds]. Refused under CI.
    #[arg(long)]
    recalibrate: bool,
}

fn context(args: CommonArgs, recalibrate: bool) -> Result<Context, error::CliError> {
    let config = RunConfig::load(&args.config)?;
    let out = commands::output_dir(&config, args.out.as_deref());
    Ok(Context { config, out, quiet: args.quiet, recalibrate })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Price(a) => context(a.common, a.recalibrate).and_then(|c| commands::price(&c)),
        Command::VerifyBalance(a) => context(a.common, a.recalibrate).and_then(|c| commands::verify_balance(&c)),
        Command::SnellCheck(a) => context(a, false).and_then(|c| commands::snell_check(&c)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
