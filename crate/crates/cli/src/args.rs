use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Streaming 4D mmWave radar perception: filter, cluster, classify.
///
/// Frame files hold one frame per line. Every path accepts `-` for
/// stdin/stdout, so stages compose with pipes.
#[derive(Debug, Parser)]
#[command(name = "radar4d", version)]
pub struct Cli {
    /// Pipeline config file (TOML). Defaults to the shipped configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Overrides the simulator / benchmark seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene: frames plus per-frame ground truth.
    Simulate(SimulateArgs),
    /// Apply the noise filter to a frame stream.
    Filter(FilterArgs),
    /// Cluster (already filtered) frames; writes per-point cluster labels.
    Cluster(ClusterArgs),
    /// Cluster and classify (already filtered) frames; writes detections.
    Classify(ClassifyArgs),
    /// Filter, cluster and classify a raw frame stream.
    Pipeline(PipelineArgs),
    /// Score detections against ground truth, per dust level.
    Evaluate(EvaluateArgs),
    /// Time the filter and the whole chain on random frames.
    Bench(BenchArgs),
    /// Print the classification rules in evaluation order.
    Rules,
    /// Print the shipped, annotated pipeline config.
    DefaultConfig,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene file (TOML). Defaults to the shipped scene.
    #[arg(long, value_name = "PATH")]
    pub scene: Option<PathBuf>,
    /// Dust levels to sweep, one scene run per level.
    #[arg(long, value_delimiter = ',', value_name = "L,..")]
    pub levels: Option<Vec<usize>>,
    /// Frames per level.
    #[arg(long, value_name = "N")]
    pub frames: Option<usize>,
    #[arg(short, long, default_value = "-", value_name = "PATH")]
    pub output: String,
    /// Ground-truth output (JSON lines).
    #[arg(long, value_name = "PATH")]
    pub truth: Option<String>,
}

#[derive(Debug, Default, Args)]
pub struct FilterOverrides {
    #[arg(long, allow_hyphen_values = true, value_name = "DBSM")]
    pub rcs_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_name = "DBSM")]
    pub rcs_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_name = "DEG")]
    pub az_min_deg: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_name = "DEG")]
    pub az_max_deg: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_name = "DEG")]
    pub el_min_deg: Option<f64>,
    #[arg(long, allow_hyphen_values = true, value_name = "DEG")]
    pub el_max_deg: Option<f64>,
    #[arg(long, value_name = "M/S")]
    pub v_abs_max: Option<f64>,
    #[arg(long, value_name = "BOOL")]
    pub static_gate: Option<bool>,
    #[arg(long, value_name = "M/S")]
    pub static_band: Option<f64>,
    #[arg(long, value_name = "M")]
    pub static_range_min: Option<f64>,
    #[arg(long, value_name = "M")]
    pub static_range_max: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct ClusterOverrides {
    /// Neighbour distance d, metres.
    #[arg(long, value_name = "M")]
    pub radius: Option<f64>,
    #[arg(long, value_name = "N")]
    pub min_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Io {
    #[arg(short, long, default_value = "-", value_name = "PATH")]
    pub input: String,
    #[arg(short, long, default_value = "-", value_name = "PATH")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub io: Io,
    /// Per-frame filter report (CSV).
    #[arg(long, value_name = "PATH")]
    pub report: Option<String>,
    #[command(flatten)]
    pub filter: FilterOverrides,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub io: Io,
    #[command(flatten)]
    pub cluster: ClusterOverrides,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub io: Io,
    #[command(flatten)]
    pub cluster: ClusterOverrides,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub io: Io,
    /// Per-frame report table (CSV) with counts and latency.
    #[arg(long, value_name = "PATH")]
    pub reports: Option<String>,
    /// Ground truth; only used to fill the dust level column of the reports.
    #[arg(long, value_name = "PATH")]
    pub truth: Option<String>,
    #[command(flatten)]
    pub filter: FilterOverrides,
    #[command(flatten)]
    pub cluster: ClusterOverrides,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "PATH")]
    pub detections: String,
    #[arg(long, value_name = "PATH")]
    pub reports: String,
    #[arg(long, value_name = "PATH")]
    pub truth: String,
    /// Centroid-to-truth match distance, metres.
    #[arg(long, default_value_t = radar4d::metrics::DEFAULT_MATCH_RADIUS, value_name = "M")]
    pub match_radius: f64,
    /// Also write the per-level table as CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1000,2000,4000,8000",
        value_name = "N,.."
    )]
    pub sizes: Vec<usize>,
    /// Frames per size.
    #[arg(long, default_value_t = 200, value_name = "N")]
    pub frames: usize,
    #[arg(short, long, default_value = "-", value_name = "PATH")]
    pub output: String,
}
