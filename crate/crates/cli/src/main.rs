mod commands;
mod config;
mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::RunConfig;

/// Budget pacing toolkit: Bode margin analysis, compensator grid search,
/// Tustin discretization for deployment, closed-loop pacing simulation,
/// and traffic spectrum analysis.
#[derive(Parser)]
#[command(name = "pacekit", version, about)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (or directory for `simulate`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the configured simulation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format for row-oriented emissions.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the frequency response of the configured loop as CSV rows.
    Bode {
        /// Emit the reference-to-spend closed loop instead of the open loop.
        #[arg(long)]
        closed_loop: bool,
    },
    /// Print the stability report (GM/PM/COG/CL-BW) as JSON.
    Margins,
    /// Evaluate the PI grid (plus any zero-pole rows) at both plant gains.
    Gridsearch,
    /// Run the closed-loop pacing simulation; writes trace CSV + report JSON.
    Simulate {
        /// Also run the step-controller baseline and report both.
        #[arg(long)]
        compare_baseline: bool,
    },
    /// Spectrum of the traffic curve; prints the max significant frequency.
    Fft {
        /// Traffic CSV (`time_s,intensity`) or an irregular sample stream
        /// (`timestamp_s,spend_velocity`), which is regularized first.
        #[arg(long)]
        traffic: Option<PathBuf>,
    },
    /// Convert the configured compensator to recurrence coefficients (JSON).
    Discretize {
        /// Sampling period in seconds; defaults to the plant pacing interval.
        #[arg(long)]
        t_z: Option<f64>,
    },
}

/// CLI failure classes, mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or usage: exit 2.
    Config(String),
    /// Numerical failure (singular evaluation, impossible request): exit 3.
    Numerical(String),
    /// Filesystem failure: exit 4.
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<pacekit::Error> for CliError {
    fn from(e: pacekit::Error) -> Self {
        match e {
            pacekit::Error::InvalidInput(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

fn require_config(cli: &Cli) -> Result<(RunConfig, PathBuf), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::load(path)?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    Ok((cfg, base))
}

fn require_out(cli: &Cli) -> Result<&PathBuf, CliError> {
    cli.out
        .as_ref()
        .ok_or_else(|| CliError::Config("--out <path> is required".into()))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Bode { closed_loop } => {
            let (cfg, _) = require_config(cli)?;
            let out = require_out(cli)?;
            commands::cmd_bode(&cfg, out, *closed_loop, cli.format == Format::Json)
        }
        Command::Margins => {
            let (cfg, _) = require_config(cli)?;
            println!("{}", commands::cmd_margins(&cfg)?);
            Ok(())
        }
        Command::Gridsearch => {
            let (cfg, _) = require_config(cli)?;
            let out = require_out(cli)?;
            commands::cmd_gridsearch(&cfg, out)
        }
        Command::Simulate { compare_baseline } => {
            let (cfg, base) = require_config(cli)?;
            let out = require_out(cli)?;
            let report =
                commands::cmd_simulate(&cfg, &base, out, *compare_baseline, cli.seed)?;
            print!("{report}");
            Ok(())
        }
        Command::Fft { traffic } => {
            let out = require_out(cli)?;
            let (cfg, base) = match &cli.config {
                Some(_) => {
                    let (c, b) = require_config(cli)?;
                    (Some(c), b)
                }
                None => (None, PathBuf::from(".")),
            };
            let summary = commands::cmd_fft(
                cfg.as_ref(),
                &base,
                traffic.as_deref(),
                out,
                cli.format == Format::Json,
            )?;
            println!("{summary}");
            Ok(())
        }
        Command::Discretize { t_z } => {
            let (cfg, _) = require_config(cli)?;
            let json = commands::cmd_discretize(&cfg, *t_z)?;
            match &cli.out {
                Some(path) => io::write_atomic(path, &(json + "\n")),
                None => {
                    println!("{json}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pacekit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
