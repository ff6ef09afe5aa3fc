//! collapsar: solve, verify, and report on self-similar collapse solutions
//! of self-gravitating viscous flow in radial symmetry.
//!
//! Exit codes form the contract consumed by CI: 0 success, 2 configuration
//! or validation failure, 3 numerical failure, 4 residual thresholds
//! exceeded. Verbosity is controlled by the COLLAPSAR_LOG environment
//! variable (error, warn, info, debug).

mod artifacts;
mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::OutputContext;
use config::{Format, RunConfig};

/// CLI failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or invalid parameters (exit 2).
    Config(String),
    /// Integration or serialization failure (exit 3).
    Numerical(String),
    /// Residual thresholds exceeded (exit 4).
    Threshold(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Threshold(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Threshold(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "collapsar",
    version,
    about = "Self-similar collapse profiles of self-gravitating viscous flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated artifact formats (overrides the config).
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<FormatArg>>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Svg,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Svg => Format::Svg,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the profile equation and emit profile artifacts.
    Solve(RunArgs),
    /// Assemble the space-time fields and verify the governing equations.
    Verify(RunArgs),
    /// Report the blowup time and central-density amplification.
    Blowup(RunArgs),
    /// Integrate the legacy Emden-type profile equations.
    Legacy(RunArgs),
}

fn run(args: &RunArgs, f: fn(&RunConfig, &OutputContext) -> Result<(), CliError>) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let formats = args
        .format
        .as_ref()
        .map(|v| v.iter().map(|&f| Format::from(f)).collect());
    let out = OutputContext::resolve(&cfg, args.out.clone(), formats)?;
    f(&cfg, &out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("COLLAPSAR_LOG")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => run(args, commands::cmd_solve),
        Command::Verify(args) => run(args, commands::cmd_verify),
        Command::Blowup(args) => run(args, commands::cmd_blowup),
        Command::Legacy(args) => run(args, commands::cmd_legacy),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("collapsar: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
