use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use boundary_iou::errorsim::ErrorKind;
use boundary_iou::measures::{CITYSCAPES_DILATION_RATIO, DEFAULT_DILATION_RATIO};
use boundary_iou::MeasureKind;

mod commands;
mod io;

#[derive(Debug, Parser)]
#[command(name = "biou", version, about = "Boundary IoU segmentation evaluation")]
struct Cli {
    /// Worker threads (defaults to the number of CPUs). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare two single-mask files with every measure.
    Measure(MeasureArgs),
    /// COCO-style Mask AP and/or Boundary AP.
    EvalAp(EvalArgs),
    /// Mask PQ and/or Boundary PQ.
    EvalPq(EvalArgs),
    /// Generate pseudo-predictions from ground truth with a simulated error.
    Simulate(SimulateArgs),
    /// Sensitivity curves over error severities and object sizes (CSV).
    Sensitivity(SensitivityArgs),
}

/// `--dilation-ratio`: a positive fraction of the image diagonal or the name
/// `cityscapes`.
fn parse_ratio(s: &str) -> std::result::Result<f64, String> {
    if s == "cityscapes" {
        return Ok(CITYSCAPES_DILATION_RATIO);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number or `cityscapes`")),
    }
}

#[derive(Debug, Args)]
struct Common {
    /// Boundary distance as a fraction of the image diagonal, or `cityscapes` (0.005).
    #[arg(long, value_parser = parse_ratio, default_value_t = DEFAULT_DILATION_RATIO)]
    dilation_ratio: f64,

    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MeasureArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeasureChoice {
    Mask,
    Boundary,
    Both,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum, default_value_t = MeasureChoice::Both)]
    measure: MeasureChoice,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// COCO-style ground-truth file.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    error: ErrorKind,
    #[arg(long)]
    severity: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepChoice {
    Severity,
    Size,
    Both,
}

#[derive(Debug, Args)]
struct SensitivityArgs {
    /// COCO-style ground-truth file; built-in synthetic shapes when omitted.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Error kinds to sweep (comma separated); all kinds when omitted.
    #[arg(long, value_delimiter = ',')]
    error: Vec<ErrorKind>,
    /// Severities for the severity sweep; a per-kind ladder when omitted.
    #[arg(long, value_delimiter = ',')]
    severities: Vec<f64>,
    /// Fixed severity for the size sweep; a per-kind default when omitted.
    #[arg(long)]
    size_severity: Option<f64>,
    /// Measures to report (comma separated); all when omitted.
    #[arg(long, value_delimiter = ',')]
    measures: Vec<MeasureKind>,
    /// Area bin edges in pixels for the size sweep; 16² increments when omitted.
    #[arg(long, value_delimiter = ',')]
    bins: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SweepChoice::Both)]
    sweep: SweepChoice,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
}

fn check_inputs(paths: &[&PathBuf]) -> Result<()> {
    for path in paths {
        if !path.is_file() {
            bail!("input file {} does not exist", path.display());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Measure(a) => {
            check_inputs(&[&a.gt, &a.pred])?;
            commands::measure(
                &a.gt,
                &a.pred,
                a.common.dilation_ratio,
                a.common.out.as_deref(),
            )
        }
        Command::EvalAp(a) => {
            check_inputs(&[&a.gt, &a.pred])?;
            commands::eval_ap(
                &a.gt,
                &a.pred,
                measures_for(a.measure),
                a.common.dilation_ratio,
                a.common.out.as_deref(),
            )
        }
        Command::EvalPq(a) => {
            check_inputs(&[&a.gt, &a.pred])?;
            commands::eval_pq(
                &a.gt,
                &a.pred,
                measures_for(a.measure),
                a.common.dilation_ratio,
                a.common.out.as_deref(),
            )
        }
        Command::Simulate(a) => {
            check_inputs(&[&a.gt])?;
            commands::simulate(&a.gt, a.error, a.severity, a.seed, a.out.as_deref())
        }
        Command::Sensitivity(a) => {
            if let Some(gt) = &a.gt {
                check_inputs(&[gt])?;
            }
            let plan = commands::SensitivityPlan {
                gt: a.gt,
                kinds: a.error,
                severities: a.severities,
                size_severity: a.size_severity,
                measures: a.measures,
                bins: a.bins,
                severity_sweep: a.sweep != SweepChoice::Size,
                size_sweep: a.sweep != SweepChoice::Severity,
                seed: a.seed,
                dilation_ratio: a.common.dilation_ratio,
            };
            commands::sensitivity(&plan, a.common.out.as_deref())
        }
    }
}

fn measures_for(choice: MeasureChoice) -> Vec<boundary_iou::detection::IouMeasure> {
    use boundary_iou::detection::IouMeasure;
    match choice {
        MeasureChoice::Mask => vec![IouMeasure::Mask],
        MeasureChoice::Boundary => vec![IouMeasure::Boundary],
        MeasureChoice::Both => vec![IouMeasure::Mask, IouMeasure::Boundary],
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
