use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twophoton::uniform_grid;
use twophoton_cli::error::EXIT_OK;
use twophoton_cli::{
    convergence_sweep, fit_column, format_convergence, format_fit, oracle_eval, preset,
    run_scenario, write_atomic, CliError, CliResult, FitRequest, Formula, OracleParams,
    ScenarioConfig, PRESETS,
};

/// Two-photon Rabi oscillations in a three-mode Kerr resonator.
///
/// Times are in units of 1/u and rates in units of u.
#[derive(Parser)]
#[command(name = "twophoton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario (see `presets`).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its trajectory CSV.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
        /// Check the smallest eigenvalue at every output time.
        #[arg(long)]
        audit_positivity: bool,
    },
    /// Tabulate a closed-form result.
    Oracle {
        /// eq7, eq8, eq9, eq10 or eigensystem.
        #[arg(long)]
        formula: String,
        #[arg(long, default_value_t = 1.0)]
        u: f64,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Pump amplitude for eq9 and eq10.
        #[arg(long, default_value_t = 0.01)]
        f: f64,
        #[arg(long, default_value_t = 20.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one column of a trajectory CSV to the two-harmonic model.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        column: String,
        /// Base frequency; with --free-omega the guess, refined within a factor √2.
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        free_omega: bool,
        #[arg(long, default_value_t = 0.1)]
        gamma_scale: f64,
        /// Ignore samples before this time.
        #[arg(long, default_value_t = 0.0)]
        t_min: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario at several cutoffs and report deviations from the largest.
    Converge {
        #[command(flatten)]
        source: Source,
        /// Comma-separated cutoffs.
        #[arg(long, value_delimiter = ',', required = true)]
        nmax: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        audit_positivity: bool,
    },
    /// List presets, or print one as a scenario file.
    Presets {
        /// Preset to print.
        name: Option<String>,
    },
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load(source: &Source) -> CliResult<ScenarioConfig> {
    match (&source.config, &source.preset) {
        (Some(path), _) => Ok(ScenarioConfig::parse(&read(path)?)?),
        (None, Some(name)) => preset(name).ok_or_else(|| {
            CliError::Input(format!(
                "unknown preset `{name}`; available: {}",
                PRESETS.join(", ")
            ))
        }),
        (None, None) => unreachable!("clap requires one source"),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            source,
            out,
            audit_positivity,
        } => {
            let mut cfg = load(&source)?;
            cfg.audit_positivity |= audit_positivity;
            write_atomic(&out, &run_scenario(&cfg)?)
        }
        Command::Oracle {
            formula,
            u,
            gamma,
            delta,
            f,
            t_max,
            dt,
            out,
        } => {
            let formula: Formula = formula.parse()?;
            let grid = uniform_grid(t_max, dt)?;
            let params = OracleParams { u, gamma, delta, f };
            write_atomic(&out, &oracle_eval(formula, &params, &grid)?)
        }
        Command::Fit {
            input,
            column,
            omega,
            free_omega,
            gamma_scale,
            t_min,
            out,
        } => {
            let req = FitRequest {
                column,
                omega,
                free_omega,
                gamma_scale,
                t_min,
            };
            let fit = fit_column(&read(&input)?, &req)?;
            write_atomic(&out, &format_fit(&fit))
        }
        Command::Converge {
            source,
            nmax,
            out,
            audit_positivity,
        } => {
            let mut cfg = load(&source)?;
            cfg.audit_positivity |= audit_positivity;
            write_atomic(&out, &format_convergence(&convergence_sweep(&cfg, &nmax)?))
        }
        Command::Presets { name: None } => {
            for name in PRESETS {
                println!("{name}");
            }
            Ok(())
        }
        Command::Presets { name: Some(name) } => {
            let cfg =
                preset(&name).ok_or_else(|| CliError::Input(format!("unknown preset `{name}`")))?;
            print!("{}", cfg.to_config_string());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
