use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Environment variable naming the dataset root when neither a flag nor the
/// config file gives one.
pub const DATASET_ENV: &str = "LIDAR_AUGMENT_DATASET";

#[derive(Debug, Parser)]
#[command(
    name = "lidar-augment",
    version,
    about = "LiDAR augmentation with class-filtered pseudo points"
)]
pub struct Cli {
    /// Label map file (`id name` per line). Defaults to the SemanticKITTI classes.
    #[arg(long, global = true)]
    pub label_map: Option<PathBuf>,

    /// Worker threads for directory inputs (0 = one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Report rendering on stdout.
    #[arg(long, global = true, value_enum)]
    pub report_format: Option<ReportFormat>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    /// `key=value` lines, one block per frame.
    Kv,
    /// One JSON object per line.
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spherically project scans into range images.
    RangeProject(RangeProjectArgs),
    /// Back-project whitelisted depth pixels into a pseudo point cloud.
    Sgp(SgpArgs),
    /// Drop pseudo points without real LiDAR support nearby.
    Clean(CleanArgs),
    /// Concatenate the labeled real scan with the pseudo cloud.
    Fuse(FuseArgs),
    /// Randomly discard a fixed fraction of points.
    Stvd(StvdArgs),
    /// Point counts over a list of discard rates.
    Sweep(SweepArgs),
    /// Render synthetic frames in the dataset layout.
    Sim(SimArgs),
    /// Run sgp, clean and fuse over a dataset.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FovArgs {
    /// Upper edge of the vertical field of view, degrees.
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub fov_up: f64,
    /// Lower edge of the vertical field of view, degrees.
    #[arg(long, default_value_t = -25.0, allow_negative_numbers = true)]
    pub fov_down: f64,
    #[arg(long, default_value_t = 2048)]
    pub range_width: usize,
    #[arg(long, default_value_t = 64)]
    pub range_height: usize,
}

#[derive(Debug, Args)]
pub struct RangeProjectArgs {
    /// Velodyne `.bin` file or directory of them.
    #[arg(long)]
    pub scan: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fov: FovArgs,
    /// Range PNG quantization: stored value = meters × scale.
    #[arg(long, default_value_t = 256.0)]
    pub depth_scale: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SgpParams {
    /// Whitelisted class names, comma separated. An empty string selects nothing.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    /// Pixel step in both image directions.
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub min_depth: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SgpArgs {
    /// Depth PNG or directory.
    #[arg(long)]
    pub depth: PathBuf,
    /// Segment PNG or directory.
    #[arg(long)]
    pub segments: PathBuf,
    /// KITTI calibration file or directory.
    #[arg(long)]
    pub calib: PathBuf,
    /// Output `.bin` (a `.labels` sidecar is written next to it) or directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub params: SgpParams,
    #[arg(long, default_value_t = 256.0)]
    pub depth_scale: f64,
    /// Also back-project every valid pixel and report the density reduction.
    #[arg(long)]
    pub density: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CleanParams {
    /// Neighborhood radius (sphere) or half-extent (cube), meters.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub shape: Option<pseudo_lidar::clean::VolumeShape>,
    /// Real points required inside the volume.
    #[arg(long)]
    pub min_neighbors: Option<usize>,
    /// Voxel size of the neighbor index; at least the radius.
    #[arg(long)]
    pub cell_size: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Labeled pseudo cloud `.bin` or directory.
    #[arg(long)]
    pub pseudo: PathBuf,
    /// Real velodyne scan or directory.
    #[arg(long)]
    pub scan: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub params: CleanParams,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Real velodyne scan or directory.
    #[arg(long)]
    pub scan: PathBuf,
    /// Labeled pseudo cloud or directory.
    #[arg(long)]
    pub pseudo: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Range-image segment PNG (or directory) used to label the real scan.
    #[arg(
        long,
        conflicts_with = "real_class",
        required_unless_present = "real_class"
    )]
    pub range_labels: Option<PathBuf>,
    /// Label every real point with this class instead.
    #[arg(long)]
    pub real_class: Option<String>,
    /// Give occluded points more than this many meters behind their range
    /// pixel's nearest return the `unlabeled` class. Off by default.
    #[arg(long, conflicts_with = "real_class")]
    pub label_lift_depth_gate: Option<f64>,
    #[command(flatten)]
    pub fov: FovArgs,
}

#[derive(Debug, Args)]
pub struct StvdArgs {
    /// Labeled cloud or directory.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Fraction of points to drop.
    #[arg(long, default_value_t = 0.8)]
    pub rate: f64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Labeled cloud.
    #[arg(long)]
    pub input: PathBuf,
    /// Discard rates, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = pseudo_lidar::augment::DEFAULT_SWEEP_RATES)]
    pub rates: Vec<f64>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = TableFormat::Table)]
    pub format: TableFormat,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Dataset root to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Render this scene file as a single frame.
    #[arg(long, conflicts_with_all = ["frames", "seed"], required_unless_present = "frames")]
    pub scene: Option<PathBuf>,
    /// Number of random frames.
    #[arg(long, requires = "seed")]
    pub frames: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub fov: FovArgs,
    #[arg(long, default_value_t = 256.0)]
    pub depth_scale: f64,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset root (overrides the config and the environment).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub sgp: SgpParams,
    #[command(flatten)]
    pub clean: CleanParams,
}
