//! Command-line front end: argument parsing, output formats and exit codes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
pub mod manifest;
pub mod table;

use manifest::{replay_argv, RunManifest};
use table::Table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REGIME: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable capping the worker pool of `simulate`.
pub const THREADS_ENV: &str = "FROZEN_THRESHOLD_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] frozen_mis::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("output: {0}")]
    Output(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "frozen-mis", version, about = "Thresholds, message-model checks and simulations for maximum independent sets of random regular graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file; stdout when absent. A manifest is written to `<out>.manifest.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Explicit manifest path, overriding the default next to `--out`.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// First-moment and frozen-model thresholds with the predicted MIS location.
    Thresholds(ThresholdsArgs),
    /// Frozen exponent and first-moment exponent on a grid of intensities.
    Curve(CurveArgs),
    /// Symmetric message-model solution at one fugacity.
    Bethe(BetheArgs),
    /// Spectrum of the edge transition matrix and the restricted quadratic form.
    Hessian(HessianArgs),
    /// Sample graphs, find independent sets, coarsen them and validate the result.
    Simulate(SimulateArgs),
    /// Conditional probability that every vertex is forced.
    Forcing(ForcingArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct ThresholdsArgs {
    #[arg(long)]
    pub d: usize,
    /// Graph sizes for the MIS location; 10^6 when none is given.
    #[arg(long, num_args = 1..)]
    pub n: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_min: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_max: f64,
    #[arg(long)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct BetheArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct HessianArgs {
    #[arg(long)]
    pub d: usize,
    /// Intensity of the fixed point; the zero of the frozen exponent by default.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SetKind {
    Maximum,
    Greedy,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    /// Set to coarsen; maximum when the exact solver applies, greedy otherwise.
    #[arg(long, value_enum)]
    pub set: Option<SetKind>,
    /// Reject graphs with loops or multiple edges.
    #[arg(long)]
    pub simple: bool,
    #[arg(long, default_value_t = 10_000)]
    pub max_attempts: usize,
}

#[derive(Debug, Args)]
pub struct ForcingArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub k: usize,
    /// Total of a single count, or the totals of the 11, 10, 01 types separated by commas.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub total: Vec<usize>,
    /// Success probabilities: one value, or three for the pair case.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub theta: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest_path: PathBuf,
}

/// Result of a command before it is written out.
pub struct Outcome {
    pub table: Table,
    pub manifest: RunManifest,
    /// Message for stderr when the parameters leave the validated regime.
    pub regime_warning: Option<String>,
    pub notes: Vec<String>,
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    let argv = replay_argv(args.get(1..).unwrap_or(&[]));
    match execute(&cli, argv, stdout, stderr) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}\n\nUsage: frozen-mis <COMMAND> [OPTIONS]; see --help");
            EXIT_USAGE
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn execute(cli: &Cli, argv: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    if let Command::Replay(r) = &cli.command {
        let text = fs::read_to_string(&r.manifest_path)?;
        let m: RunManifest = serde_json::from_str(&text)?;
        let mut args = vec!["frozen-mis".to_string()];
        args.extend(m.argv);
        let inner = Cli::try_parse_from(&args).map_err(|e| CliError::Usage(format!("manifest arguments do not parse: {e}")))?;
        if matches!(inner.command, Command::Replay(_)) {
            return Err(CliError::Usage("a manifest cannot replay another manifest".into()));
        }
        let merged = Cli { command: inner.command, format: cli.format, out: cli.out.clone(), manifest: cli.manifest.clone() };
        return execute(&merged, args[1..].to_vec(), stdout, stderr);
    }
    let outcome = commands::dispatch(&cli.command, argv)?;
    outcome.table.check_finite()?;
    emit(cli, &outcome, stdout)?;
    for n in &outcome.notes {
        writeln!(stderr, "note: {n}")?;
    }
    if let Some(w) = &outcome.regime_warning {
        writeln!(stderr, "warning: {w}")?;
        return Ok(EXIT_REGIME);
    }
    Ok(EXIT_OK)
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn emit(cli: &Cli, o: &Outcome, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut buf = Vec::new();
    match cli.format {
        Format::Csv => o.table.write_csv(&mut buf)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &o.table.to_json(&o.manifest))?;
            buf.push(b'\n');
        }
    }
    match &cli.out {
        Some(path) => fs::write(path, &buf)?,
        None => stdout.write_all(&buf)?,
    }
    let manifest_path = cli.manifest.clone().or_else(|| cli.out.as_deref().map(sidecar));
    if let Some(p) = manifest_path {
        fs::write(p, serde_json::to_string_pretty(&o.manifest)? + "\n")?;
    }
    Ok(())
}
