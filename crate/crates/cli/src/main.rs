use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

/// Multi-view prediction aggregation, ensembling and macro-mAP evaluation.
#[derive(Debug, Parser)]
#[command(name = "viewagg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate seeded synthetic predictions.csv and labels.csv files.
    Synth(SynthArgs),
    /// Aggregate image-level predictions to study level.
    Aggregate(AggregateArgs),
    /// Weighted image-level mean of several models' predictions.
    Ensemble(EnsembleArgs),
    /// Per-class AP and macro mAP of study-level predictions.
    Evaluate(EvaluateArgs),
    /// Evaluate one aggregation per frontal:lateral ratio.
    Sweep(SweepArgs),
    /// Check asymmetric-loss gradients against finite differences.
    LossCheck(LossCheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MissingView {
    UsePresent,
    Error,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory receiving predictions.csv (or predictions_<m>.csv) and labels.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub studies: usize,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    pub classes: u32,
    #[arg(long, default_value_t = 1.5)]
    pub frontal_noise: f64,
    #[arg(long, default_value_t = 3.0)]
    pub lateral_noise: f64,
    #[arg(long, default_value_t = 0.6)]
    pub p_has_lateral: f64,
    #[arg(long, default_value_t = 0.2)]
    pub p_extra_frontal: f64,
    #[arg(long, default_value_t = 2.0)]
    pub signal: f64,
    /// Number of model prediction sets sharing the same images and labels.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub models: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    /// Frontal:lateral weights, e.g. 7:3. Defaults to equal weights.
    #[arg(long, conflicts_with = "no_view_weighting")]
    pub pp_ratio: Option<String>,
    /// Plain mean over all images of a study, ignoring view.
    #[arg(long)]
    pub no_view_weighting: bool,
    #[arg(long, value_enum, default_value_t = MissingView::UsePresent)]
    pub missing_view: MissingView,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long, num_args = 2.., required = true)]
    pub predictions: Vec<PathBuf>,
    /// Comma-separated positive weights, one per prediction file.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Study-level predictions.
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// File listing the classes to evaluate, one per line.
    #[arg(long)]
    pub classes: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub report: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Image-level predictions.
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value = "5:5,7:3,8:2")]
    pub ratios: String,
    #[arg(long, value_enum, default_value_t = MissingView::UsePresent)]
    pub missing_view: MissingView,
    #[arg(long)]
    pub classes: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub report: ReportFormat,
}

#[derive(Debug, Args)]
pub struct LossCheckArgs {
    #[arg(long, default_value_t = 0.0)]
    pub gamma_pos: f64,
    #[arg(long, default_value_t = 4.0)]
    pub gamma_neg: f64,
    #[arg(long, default_value_t = 0.05)]
    pub margin: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub clip_eps: f64,
    /// Number of random draws.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub report: OutputFormat,
}

const THREADS_VAR: &str = "VIEWAGG_THREADS";

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Synth(args) => commands::synth(&args),
        Command::Aggregate(args) => commands::aggregate(&args),
        Command::Ensemble(args) => commands::ensemble(&args),
        Command::Evaluate(args) => commands::evaluate(&args),
        Command::Sweep(args) => commands::sweep(&args),
        Command::LossCheck(args) => commands::loss_check(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
