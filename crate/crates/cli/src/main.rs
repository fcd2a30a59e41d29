mod commands;
mod error;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "splitscan", version, about = "Split-sample anomaly scans over link telemetry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic six-link frame with injected level shifts
    Simulate(SimulateArgs),
    /// Scan a frame window by window and write a report CSV
    Detect(DetectArgs),
    /// Summarize a report and render it as SVG
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioArg {
    Table2,
    Sensitivity,
    Quiet,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "sensitivity")]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seconds between samples
    #[arg(long, default_value_t = 1)]
    pub cadence: i64,
    #[arg(long, default_value_t = 7)]
    pub days: i64,
    /// Output CSV; stdout when omitted or "-"
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgoArg {
    Bdt,
    Nn,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetArg {
    /// Settings used on simulated data
    Simulated,
    /// Settings used on production measurements
    Real,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BdtScoreArg {
    /// Alpha-weighted ensemble score
    Continuous,
    /// Hard majority votes
    Votes,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    /// Input frame CSV; stdin when omitted or "-"
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Report CSV; stdout when omitted or "-"
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bdt")]
    pub algo: AlgoArg,
    #[arg(long, value_enum, default_value = "simulated")]
    pub preset: PresetArg,
    #[arg(long)]
    pub ref_hours: Option<f64>,
    #[arg(long)]
    pub subject_hours: Option<f64>,
    /// Defaults to the subject length
    #[arg(long)]
    pub stride_hours: Option<f64>,
    /// AUC cut for boosted trees
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub estimators: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, value_enum)]
    pub bdt_score: Option<BdtScoreArg>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Significance level for the network's accuracy cut
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Write per-epoch network history to this CSV
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Report CSV from `detect`
    #[arg(short, long)]
    pub report: PathBuf,
    /// Frame the report was computed on, for series traces
    #[arg(short, long)]
    pub frame: Option<PathBuf>,
    /// SVG output path
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Window length in hours, for interval ends
    #[arg(long, default_value_t = 1.0)]
    pub subject_hours: f64,
    /// Plot square roots of the series values
    #[arg(long)]
    pub sqrt: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Detect(args) => commands::detect(&args),
        Command::Report(args) => commands::report(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("splitscan: {e}");
            ExitCode::from(CliError::exit_code(&e))
        }
    }
}
