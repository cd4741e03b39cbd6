//! Command-line front end.

mod analyze;
mod infer;
mod latency;
mod nas;
mod sim;

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tinypilot", version, about = "Cost models, latency budgets, architecture search, int8 inference and closed-loop simulation for steering CNNs")]
pub struct Cli {
    /// Output format; text on a terminal, json otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for search and simulation (0 = all cores).
    #[arg(long, global = true, env = "TINYPILOT_JOBS", default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-layer shapes, parameters, MACs and memory of a model file.
    Analyze(analyze::AnalyzeArgs),
    /// Fit, apply and invert a MACs → latency model.
    #[command(subcommand)]
    Latency(latency::LatencyCmd),
    /// Enumerate, train and score the architecture search space.
    #[command(subcommand)]
    Nas(nas::NasCmd),
    /// Closed-loop driving episodes and latency × error grids.
    #[command(subcommand)]
    Sim(sim::SimCmd),
    /// Run a model on one input, optionally quantized.
    Infer(infer::InferArgs),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Constraint(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Constraint(_) => 3,
        }
    }
}

pub(crate) fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

/// Where a command prints its report.
pub struct Ctx<'a> {
    pub format: Format,
    pub jobs: usize,
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

impl Ctx<'_> {
    pub(crate) fn print(&mut self, text: &str) -> Result<(), CliError> {
        self.out.write_all(text.as_bytes()).map_err(invalid)?;
        if !text.ends_with('\n') {
            self.out.write_all(b"\n").map_err(invalid)?;
        }
        Ok(())
    }

    pub(crate) fn json<T: serde::Serialize>(&mut self, v: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(v).map_err(invalid)?;
        self.print(&text)
    }

    pub(crate) fn note(&mut self, text: &str) {
        let _ = writeln!(self.err, "{text}");
    }

    pub(crate) fn no_csv(&self, what: &str) -> Result<(), CliError> {
        if self.format == Format::Csv {
            return Err(CliError::Usage(format!("{what} has no csv output")));
        }
        Ok(())
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Writes `bytes` to `path`, or prints them when no path is given.
pub(crate) fn emit(ctx: &mut Ctx, path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, bytes),
        None => ctx.out.write_all(bytes).map_err(invalid),
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let format = cli
        .format
        .unwrap_or(if std::io::stdout().is_terminal() { Format::Text } else { Format::Json });
    let mut ctx = Ctx {
        format,
        jobs: cli.jobs,
        out,
        err,
    };
    match cli.command {
        Command::Analyze(a) => analyze::run(&mut ctx, a),
        Command::Latency(c) => latency::run(&mut ctx, c),
        Command::Nas(c) => nas::run(&mut ctx, c),
        Command::Sim(c) => sim::run(&mut ctx, c),
        Command::Infer(a) => infer::run(&mut ctx, a),
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr());
    match run(cli, &mut out, &mut err) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            let _ = writeln!(err, "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
