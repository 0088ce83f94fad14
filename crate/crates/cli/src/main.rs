use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qbm_cli::{commands, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "qbm", version, about = "Quantum Brownian motion with momentum coupling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Moment trajectories, coefficients and witness series for every mu
    Simulate { config: PathBuf },
    /// Master-equation coefficients and propagator tables
    Coefficients { config: PathBuf },
    /// Kossakowski determinant series and classification
    Witness { config: PathBuf },
    /// Finite-bath oracle against the analytic moments
    OracleCompare { config: PathBuf },
    /// Asymptotic ratios for s = 1 and s = 2
    Table1 { config: PathBuf },
    /// Pick the switch combination closest to the oracle
    Calibrate { config: PathBuf },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let (path, f): (&PathBuf, fn(&RunConfig) -> Result<String, CliError>) = match &cli.command {
        Command::Simulate { config } => (config, commands::simulate),
        Command::Coefficients { config } => (config, commands::coefficients),
        Command::Witness { config } => (config, commands::witness),
        Command::OracleCompare { config } => (config, commands::oracle_compare),
        Command::Table1 { config } => (config, commands::table1),
        Command::Calibrate { config } => (config, commands::calibrate),
    };
    let cfg = RunConfig::from_file(path)?;
    f(&cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
