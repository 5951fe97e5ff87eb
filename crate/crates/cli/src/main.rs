mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Holography forward models, GS phase retrieval and FMH sensitivity analysis.
#[derive(Debug, Parser)]
#[command(name = "holosa", version, about)]
pub struct Cli {
    /// Flat `key = value` or JSON config; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed for every random choice.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads for campaign evaluation.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Propagate one target field through a forward model and write its intensity.
    Propagate(PropagateArgs),
    /// Run GS on one target and write the trace and reconstruction.
    Gs(GsArgs),
    /// Emit a Saltelli design as CSV.
    Sample(SampleArgs),
    /// Run a Saltelli campaign and write Sobol index reports.
    Sa(CampaignArgs),
    /// Paired Fourier vs ASM run along the SLM-resolution axis.
    CompareFm(CompareArgs),
    /// Evaluate GS at the inner, mid and outer anchor points.
    Anchors(CampaignArgs),
    /// Evaluate GS on a Sobol neighborhood around an anchor point.
    Resilience(ResilienceArgs),
    /// Composite benchmarking metric from result CSVs.
    Metric(MetricArgs),
    /// Merge result CSVs into one long-format CSV.
    Report(ReportArgs),
    /// Write a synthetic PGM corpus.
    Corpus(CorpusArgs),
}

#[derive(Debug, Args)]
pub struct OpticsArgs {
    /// Forward model: fourier or asm.
    #[arg(long)]
    pub fm: Option<String>,
    /// SLM resolution M (the target is resized to M x M).
    #[arg(long)]
    pub m: Option<usize>,
    /// Wavelength in meters.
    #[arg(long)]
    pub wavelength: Option<f64>,
    /// Pixel pitch in meters.
    #[arg(long)]
    pub pitch: Option<f64>,
    /// Propagation distance in meters.
    #[arg(long)]
    pub distance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    #[arg(long, value_name = "PGM")]
    pub input: PathBuf,
    #[command(flatten)]
    pub optics: OpticsArgs,
    /// forward or inverse.
    #[arg(long, default_value = "forward")]
    pub direction: String,
    /// Use a seeded uniform random phase instead of a flat phase.
    #[arg(long)]
    pub random_phase: bool,
}

#[derive(Debug, Args)]
pub struct GsArgs {
    #[arg(long, value_name = "PGM")]
    pub target: PathBuf,
    #[command(flatten)]
    pub optics: OpticsArgs,
    #[arg(long)]
    pub iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Number of parameters; 4 uses the forward-model bounds, anything else
    /// the unit cube.
    #[arg(long)]
    pub k: Option<usize>,
    /// Base samples N.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub second_order: bool,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub fm: Option<String>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub image_limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Number of Sobol-sampled resolutions.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub m_min: Option<usize>,
    #[arg(long)]
    pub m_max: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub image_limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ResilienceArgs {
    #[command(flatten)]
    pub campaign: CampaignArgs,
    /// inner, mid or outer.
    #[arg(long)]
    pub anchor: Option<String>,
    /// Half-width as a fraction of each parameter range.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    /// Results of the method under test, row-aligned with the baseline.
    #[arg(long, value_name = "CSV")]
    pub candidate: PathBuf,
    /// Baseline (GS) results on the same rows.
    #[arg(long, value_name = "CSV")]
    pub baseline: PathBuf,
    /// Candidate results at the inner/mid/outer anchors.
    #[arg(long, value_name = "CSV")]
    pub anchors: Option<PathBuf>,
    /// Candidate results on a resilience neighborhood.
    #[arg(long, value_name = "CSV")]
    pub resilience: Option<PathBuf>,
    #[arg(long, default_value = "psnr")]
    pub metric: String,
    /// Iteration to score; defaults to the last recorded one.
    #[arg(long)]
    pub iteration: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(required = true, value_name = "CSV")]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 512)]
    pub size: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
