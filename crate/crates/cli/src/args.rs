use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cuboid_core::motion::Metric;
use cuboid_core::pipeline::{PartitionSource, ReferenceMode};
use cuboid_core::{ChannelPolicy, RawFormat, Scheme};

/// Cuboidal frame partitioning and cuboid-based motion-compensated
/// prediction.
///
/// Exit status: 0 on success, 1 on usage errors, 2 on bad or unreadable
/// input data.
#[derive(Debug, Parser)]
#[command(name = "cuboid", version)]
pub struct Cli {
  /// Worker threads for parallel stages [default: one per core]
  #[arg(long, global = true, value_name = "N")]
  pub threads: Option<usize>,

  #[command(subcommand)]
  pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
  /// Partition one frame into cuboids and write its split tree
  Partition(PartitionArgs),
  /// Replace every cuboid of one frame by its mean
  Coarsen(CoarsenArgs),
  /// Estimate motion between two frames of a sequence
  Estimate(EstimateArgs),
  /// Predict every GOP of a sequence and report per-frame PSNR and bits
  PredictGop(PredictArgs),
  /// Build rate-distortion curves for several schemes and their BD deltas
  Compare(CompareArgs),
  /// Bjøntegaard deltas between two rate-distortion curves
  Bdrate(BdrateArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
  /// Raw planar 8-bit video file
  #[arg(long, short, value_name = "PATH")]
  pub input: PathBuf,

  /// Frame width in pixels
  #[arg(long)]
  pub width: usize,

  /// Frame height in pixels
  #[arg(long)]
  pub height: usize,

  /// Sample layout of the input
  #[arg(long, value_enum, default_value_t = FormatArg::Yuv420p8)]
  pub format: FormatArg,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct CountArgs {
  /// Number of cuboids [default: derived from --block-size]
  #[arg(long, value_name = "N")]
  pub cuboids: Option<usize>,

  /// Block size B; the cuboid count becomes floor(W/B) * floor(H/B)
  /// [default: 32]
  #[arg(long, value_name = "B")]
  pub block_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
  #[command(flatten)]
  pub input: InputArgs,

  /// Zero-based index of the frame to partition
  #[arg(long, default_value_t = 0)]
  pub frame: usize,

  #[command(flatten)]
  pub count: CountArgs,

  /// Channels driving split decisions
  #[arg(long, value_enum, default_value_t = ChannelsArg::AllChannels)]
  pub channels: ChannelsArg,

  /// Write the split tree in the binary container format
  #[arg(long, value_name = "PATH")]
  pub out_tree: Option<PathBuf>,

  /// Write a text dump: a total_sse line, then `x y w h` per cuboid
  #[arg(long, value_name = "PATH")]
  pub out_dump: Option<PathBuf>,

  /// Re-read the dump and tree and check that they tile the frame
  #[arg(long)]
  pub verify: bool,
}

#[derive(Debug, Args)]
pub struct CoarsenArgs {
  #[command(flatten)]
  pub input: InputArgs,

  /// Zero-based index of the frame to coarsen
  #[arg(long, default_value_t = 0)]
  pub frame: usize,

  #[command(flatten)]
  pub count: CountArgs,

  /// Channels driving split decisions
  #[arg(long, value_enum, default_value_t = ChannelsArg::AllChannels)]
  pub channels: ChannelsArg,

  /// Write the coarsened frame as raw video in the input format
  #[arg(long, short, value_name = "PATH")]
  pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
  #[command(flatten)]
  pub input: InputArgs,

  /// Index of the reference frame; cuboids are computed on it
  #[arg(long, default_value_t = 0)]
  pub reference: usize,

  /// Index of the frame to predict
  #[arg(long, default_value_t = 1)]
  pub current: usize,

  /// Region layout
  #[arg(long, value_enum, default_value_t = SchemeArg::Cuboid)]
  pub scheme: SchemeArg,

  #[command(flatten)]
  pub count: CountArgs,

  /// Channels driving split decisions
  #[arg(long, value_enum, default_value_t = ChannelsArg::AllChannels)]
  pub channels: ChannelsArg,

  /// Search window half-width in pixels
  #[arg(long, default_value_t = 16)]
  pub range: u32,

  /// Matching metric
  #[arg(long, value_enum, default_value_t = MetricArg::Sse)]
  pub metric: MetricArg,

  /// Write `x y w h dx dy cost` per region
  #[arg(long, value_name = "PATH")]
  pub out_field: Option<PathBuf>,

  /// Write the motion-compensated frame as raw video
  #[arg(long, value_name = "PATH")]
  pub out_predicted: Option<PathBuf>,
}

/// Pipeline settings. Each flag overrides the value from `--config`.
#[derive(Debug, Args)]
pub struct PipelineArgs {
  /// JSON file with pipeline settings (field names as in the flags, snake
  /// case, e.g. {"gop_size": 8, "search": {"range": 16}})
  #[arg(long, value_name = "PATH")]
  pub config: Option<PathBuf>,

  /// Frames per GOP [default: 8]
  #[arg(long)]
  pub gop_size: Option<usize>,

  /// Reuse the anchor's cuboids or recompute them for every frame
  /// [default: anchor_only]
  #[arg(long, value_enum)]
  pub partition_source: Option<PartitionSourceArg>,

  /// Reference for frame k: predicted frame k-1 or original frame k-1
  /// [default: chained_predicted]
  #[arg(long, value_enum)]
  pub reference_mode: Option<ReferenceModeArg>,

  /// Search window half-width in pixels [default: 16]
  #[arg(long)]
  pub range: Option<u32>,

  /// Matching metric [default: sse]
  #[arg(long, value_enum)]
  pub metric: Option<MetricArg>,

  #[command(flatten)]
  pub count: CountArgs,

  /// Channels driving split decisions [default: all_channels]
  #[arg(long, value_enum)]
  pub channels: Option<ChannelsArg>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
  #[command(flatten)]
  pub input: InputArgs,

  #[command(flatten)]
  pub pipeline: PipelineArgs,

  /// Region layout [default: cuboid]
  #[arg(long, value_enum)]
  pub scheme: Option<SchemeArg>,

  /// Dead-zone quantizer step for the residual bit estimate; 1 is lossless
  /// [default: 1]
  #[arg(long)]
  pub quant_step: Option<u32>,

  /// Per-frame CSV report [default: standard output]
  #[arg(long, value_name = "PATH")]
  pub report: Option<PathBuf>,

  /// Write the predicted frames (anchors unchanged) as raw video
  #[arg(long, value_name = "PATH")]
  pub out_predicted: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
  #[command(flatten)]
  pub input: InputArgs,

  #[command(flatten)]
  pub pipeline: PipelineArgs,

  /// Schemes to compare; fixed_block always uses anchor-only regions and
  /// coarse always partitions every frame
  #[arg(long, value_enum, value_delimiter = ',', default_value = "cuboid,fixed_block,coarse")]
  pub schemes: Vec<SchemeArg>,

  /// Quantizer steps, one RD point each
  #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
  pub quant_steps: Vec<u32>,

  /// CSV report [default: standard output]
  #[arg(long, value_name = "PATH")]
  pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BdrateArgs {
  /// CSV with `rate` and `psnr` columns; give exactly twice, reference
  /// first
  #[arg(long, value_name = "PATH", num_args = 1, required = true)]
  pub curve: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum FormatArg {
  Yuv420p8,
  Yuv444p8,
  Gray8,
}

impl From<FormatArg> for RawFormat {
  fn from(v: FormatArg) -> Self {
    match v {
      FormatArg::Yuv420p8 => RawFormat::Yuv420p8,
      FormatArg::Yuv444p8 => RawFormat::Yuv444p8,
      FormatArg::Gray8 => RawFormat::Gray8,
    }
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SchemeArg {
  Cuboid,
  FixedBlock,
  Coarse,
}

impl From<SchemeArg> for Scheme {
  fn from(v: SchemeArg) -> Self {
    match v {
      SchemeArg::Cuboid => Scheme::Cuboid,
      SchemeArg::FixedBlock => Scheme::FixedBlock,
      SchemeArg::Coarse => Scheme::Coarse,
    }
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum PartitionSourceArg {
  AnchorOnly,
  PerFrame,
}

impl From<PartitionSourceArg> for PartitionSource {
  fn from(v: PartitionSourceArg) -> Self {
    match v {
      PartitionSourceArg::AnchorOnly => PartitionSource::AnchorOnly,
      PartitionSourceArg::PerFrame => PartitionSource::PerFrame,
    }
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ReferenceModeArg {
  ChainedPredicted,
  PreviousOriginal,
}

impl From<ReferenceModeArg> for ReferenceMode {
  fn from(v: ReferenceModeArg) -> Self {
    match v {
      ReferenceModeArg::ChainedPredicted => ReferenceMode::ChainedPredicted,
      ReferenceModeArg::PreviousOriginal => ReferenceMode::PreviousOriginal,
    }
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum MetricArg {
  Sse,
  Sad,
}

impl From<MetricArg> for Metric {
  fn from(v: MetricArg) -> Self {
    match v {
      MetricArg::Sse => Metric::Sse,
      MetricArg::Sad => Metric::Sad,
    }
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ChannelsArg {
  AllChannels,
  LumaOnly,
}

impl From<ChannelsArg> for ChannelPolicy {
  fn from(v: ChannelsArg) -> Self {
    match v {
      ChannelsArg::AllChannels => ChannelPolicy::AllChannels,
      ChannelsArg::LumaOnly => ChannelPolicy::LumaOnly,
    }
  }
}
