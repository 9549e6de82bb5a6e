use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dephasim::cli::{self, CliError, OutputFormat};

#[derive(Parser)]
#[command(
    name = "dephasim",
    version,
    about = "Exact dephasing of a harmonic oscillator energy-coupled to an oscillator bath"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dephasing exponent Γ(t) summed over an explicit finite bath
    Finite(JobArgs),
    /// Γ(t) by adaptive quadrature over an Ohmic spectral density
    Continuum(JobArgs),
    /// Closed-form Γ(t): vacuum, thermal, short-time, or high-temperature
    #[command(name = "closed_form")]
    ClosedForm(JobArgs),
    /// Apply a dephasing exponent to a density matrix
    Evolve(JobArgs),
    /// Brute-force propagation on truncated Fock spaces
    Oracle(JobArgs),
    /// Exact commensurability analysis of a finite bath
    Periodicity(JobArgs),
    /// Compare an oracle artifact against a Γ-series artifact
    Compare(JobArgs),
}

#[derive(Args)]
struct JobArgs {
    /// Path to the JSON run config
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured output format (csv or json)
    #[arg(long)]
    format: Option<String>,
}

fn execute(expected: &'static str, args: JobArgs) -> Result<PathBuf, CliError> {
    let mut config = cli::load_config(&args.config)?;
    let actual = cli::job_name(&config.job);
    if actual != expected {
        return Err(CliError::JobMismatch {
            subcommand: expected.to_string(),
            config_job: actual.to_string(),
        });
    }
    if let Some(out) = args.out {
        config.output.path = out;
    }
    if let Some(format) = args.format {
        config.output.format = match format.as_str() {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            other => {
                return Err(CliError::InvalidJob {
                    message: format!("unknown output format `{other}` (expected csv or json)"),
                })
            }
        };
    }
    cli::run(&config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (expected, args) = match cli.command {
        Command::Finite(a) => ("finite", a),
        Command::Continuum(a) => ("continuum", a),
        Command::ClosedForm(a) => ("closed_form", a),
        Command::Evolve(a) => ("evolve", a),
        Command::Oracle(a) => ("oracle", a),
        Command::Periodicity(a) => ("periodicity", a),
        Command::Compare(a) => ("compare", a),
    };
    match execute(expected, args) {
        Ok(path) => {
            println!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(cli::exit_code(&err) as u8)
        }
    }
}
