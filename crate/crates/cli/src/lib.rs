//! Batch front end: configuration parsing, the subcommands and their table output.

pub mod commands;
pub mod config;
pub mod table;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{Format, RunConfig};
pub use table::{Cell, Column, Table};

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] bosegas_core::Error),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Core(e) if e.is_input_error() => 2,
            CliError::Core(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        self.to_string()
    }

    fn from_csv(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Fermi boundary, dressed charge, density, Fermi velocity and sampled curves.
    GroundState,
    /// Yang-Yang solutions for each temperature of the sweep.
    Thermal,
    /// Decay rates of the lowest excitation classes.
    Lengths,
    /// Sector amplitudes and the harmonic amplitudes of the correlator.
    Amplitudes,
    /// Density correlator and generating-function series over the (α, T, x) sweep.
    Correlator,
    /// Runs the verification checks and reports pass/fail.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::Thermal => "thermal",
            Command::Lengths => "lengths",
            Command::Amplitudes => "amplitudes",
            Command::Correlator => "correlator",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bosegas",
    version,
    about = "Low-temperature correlator asymptotics of the 1D Bose gas"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat key = value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Restricts `verify` to the named check; repeatable.
    #[arg(long, global = true, value_name = "NAME")]
    pub only: Vec<String>,
    /// Ground-state quadrature nodes.
    #[arg(long, global = true, value_name = "INT")]
    pub grid_n: Option<usize>,
    /// Contour nodes of the smooth amplitude.
    #[arg(long, global = true, value_name = "INT")]
    pub contour_n: Option<usize>,
    /// Overrides one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl Cli {
    /// Configuration file, then `--set` overrides, then the dedicated flags.
    pub fn resolve_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        for kv in &self.overrides {
            cfg.apply_override(kv)?;
        }
        if let Some(n) = self.grid_n {
            cfg.grid_n = n;
        }
        if let Some(n) = self.contour_n {
            cfg.contour_n = n;
        }
        if let Some(f) = self.format {
            cfg.format = Some(match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            });
        }
        if let Some(p) = &self.out {
            cfg.out = Some(p.display().to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(cfg: &RunConfig, bytes: &[u8]) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {path}: {e}")))
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Runs one invocation. Human-readable progress goes to standard error.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.resolve_config()?;
    if !cli.only.is_empty() && cli.command != Command::Verify {
        return Err(CliError::Input(
            "--only applies to the verify command".into(),
        ));
    }
    if cli.command == Command::Verify {
        let report = commands::verify(&cfg, &cli.only)?;
        for outcome in &report.outcomes {
            eprintln!("{}", outcome.summary());
        }
        emit(&cfg, &report.encode(cfg.format.unwrap_or(Format::Json))?)?;
        let failed = report.failures();
        return if failed.is_empty() {
            eprintln!("all {} checks passed", report.outcomes.len());
            Ok(())
        } else {
            Err(CliError::Verification(format!(
                "failing checks: {}",
                failed.join(", ")
            )))
        };
    }
    let table = match cli.command {
        Command::GroundState => commands::ground_state(&cfg)?,
        Command::Thermal => commands::thermal(&cfg)?,
        Command::Lengths => commands::lengths(&cfg)?,
        Command::Amplitudes => commands::amplitudes(&cfg)?,
        Command::Correlator => commands::correlator(&cfg)?,
        Command::Verify => unreachable!(),
    };
    let mut buf = Vec::new();
    table.write(
        cli.command.name(),
        cfg.format.unwrap_or(Format::Csv),
        &mut buf,
    )?;
    emit(&cfg, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        use bosegas_core::Error;
        assert_eq!(CliError::Verification("x".into()).exit_code(), 1);
        assert_eq!(CliError::Input("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Core(Error::InvalidInput("x".into())).exit_code(),
            2
        );
        assert_eq!(
            CliError::Core(Error::TemperatureGate { t: 1.0, gate: 0.05 }).exit_code(),
            2
        );
        assert_eq!(CliError::Core(Error::Numerical("x".into())).exit_code(), 3);
        assert_eq!(
            CliError::Core(Error::Singular { pivot_ratio: 0.0 }).exit_code(),
            3
        );
    }

    #[test]
    fn flags_override_the_configuration() {
        let cli = Cli::parse_from([
            "bosegas",
            "thermal",
            "--set",
            "grid_n=40",
            "--grid-n",
            "50",
            "--format",
            "json",
        ]);
        let cfg = cli.resolve_config().unwrap();
        assert_eq!(cfg.grid_n, 50);
        assert_eq!(cfg.format, Some(Format::Json));
    }
}
