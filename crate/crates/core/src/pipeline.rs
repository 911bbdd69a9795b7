//! GOP-level prediction pipeline and bit accounting.
//!
//! Frame 0 of a GOP is the anchor. It is available at both ends, so its own
//! pixels cost nothing here; only its partition (cuboid scheme) is charged.
//! Every later frame is predicted from the previous predicted frame
//! (chained) or the previous original, using either the anchor's regions or
//! regions recomputed on that frame. The coarse scheme has no motion: each
//! frame is replaced by its per-cuboid means.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::tree_bit_cost;
use crate::cuboid::Cuboid;
use crate::error::{Error, Result};
use crate::frame::{psnr, sse_region, ChannelPolicy, Frame, Psnr};
use crate::motion::{
  compensate, estimate_motion, fixed_block_grid, motion_bit_cost, residual, MotionField, Residual,
  SearchConfig,
};
use crate::partition::{coarsen, cuboid_count_from_blocks, partition_with, CuboidPartition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
  Cuboid,
  FixedBlock,
  Coarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionSource {
  AnchorOnly,
  PerFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
  ChainedPredicted,
  PreviousOriginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
  pub gop_size: usize,
  /// Cuboid count; `None` derives it from `block_size`.
  pub n_cuboids: Option<usize>,
  /// Fixed-grid block size, and the block size the cuboid count is derived
  /// from.
  pub block_size: usize,
  pub partition_source: PartitionSource,
  pub reference_mode: ReferenceMode,
  pub search: SearchConfig,
  pub scheme: Scheme,
  /// Channels driving split decisions.
  pub channels: ChannelPolicy,
  /// Dead-zone quantizer step for the residual estimate; 1 is lossless.
  pub quant_step: u32,
}

impl Default for PipelineConfig {
  fn default() -> Self {
    Self {
      gop_size: 8,
      n_cuboids: None,
      block_size: 32,
      partition_source: PartitionSource::AnchorOnly,
      reference_mode: ReferenceMode::ChainedPredicted,
      search: SearchConfig::default(),
      scheme: Scheme::Cuboid,
      channels: ChannelPolicy::AllChannels,
      quant_step: 1,
    }
  }
}

impl PipelineConfig {
  pub fn validate(&self) -> Result<()> {
    let fail = |m: &str| Err(Error::Config(m.into()));
    if self.gop_size == 0 {
      return fail("gop_size must be at least 1");
    }
    if self.block_size == 0 {
      return fail("block_size must be at least 1");
    }
    if self.quant_step == 0 {
      return fail("quant_step must be at least 1");
    }
    if self.n_cuboids == Some(0) {
      return fail("n_cuboids must be at least 1");
    }
    match (self.scheme, self.partition_source) {
      (Scheme::Coarse, PartitionSource::AnchorOnly) => {
        fail("the coarse scheme partitions every frame; use partition_source = per_frame")
      }
      (Scheme::FixedBlock, PartitionSource::PerFrame) => {
        fail("fixed_block uses one grid for all frames; use partition_source = anchor_only")
      }
      _ => Ok(()),
    }
  }

  /// Cuboid count for a `width` x `height` frame.
  pub fn cuboid_count(&self, width: usize, height: usize) -> Result<usize> {
    match self.n_cuboids {
      Some(n) => Ok(n),
      None => match cuboid_count_from_blocks(width, height, self.block_size) {
        0 => Err(Error::Config(format!(
          "block size {} exceeds the {width}x{height} frame",
          self.block_size
        ))),
        n => Ok(n),
      },
    }
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameRole {
  Anchor,
  Predicted,
  Coarse,
}

impl FrameRole {
  pub fn as_str(self) -> &'static str {
    match self {
      FrameRole::Anchor => "anchor",
      FrameRole::Predicted => "predicted",
      FrameRole::Coarse => "coarse",
    }
  }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
  pub index: usize,
  pub role: FrameRole,
  /// Motion-compensated (or coarse) frame.
  pub predicted: Frame,
  pub field: Option<MotionField>,
  /// Luma SSE of `predicted` against the original.
  pub sse: u64,
  /// Luma PSNR of `predicted` against the original.
  pub psnr: Psnr,
  /// Luma SSE of `predicted` plus the quantized residual.
  pub recon_sse: u64,
  /// Luma PSNR of `predicted` plus the quantized residual.
  pub recon_psnr: Psnr,
  pub tree_bits: u64,
  pub motion_bits: u64,
  /// Entropy estimate of the quantized residual.
  pub residual_bits: u64,
}

impl FrameResult {
  pub fn side_info_bits(&self) -> u64 {
    self.tree_bits + self.motion_bits
  }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GopResult {
  pub frames: Vec<FrameResult>,
  pub quant_step: u32,
}

impl GopResult {
  pub fn side_info_bits(&self) -> u64 {
    self.frames.iter().map(FrameResult::side_info_bits).sum()
  }

  pub fn tree_bits(&self) -> u64 {
    self.frames.iter().map(|f| f.tree_bits).sum()
  }

  pub fn motion_bits(&self) -> u64 {
    self.frames.iter().map(|f| f.motion_bits).sum()
  }

  pub fn residual_bits(&self) -> u64 {
    self.frames.iter().map(|f| f.residual_bits).sum()
  }

  /// Frames whose quality is being measured (everything but the anchor).
  pub fn scored(&self) -> impl Iterator<Item = &FrameResult> {
    self.frames.iter().filter(|f| f.role != FrameRole::Anchor)
  }

  /// Mean prediction PSNR in dB over scored frames; infinite if any frame is
  /// predicted exactly, `None` if there are no scored frames.
  pub fn mean_psnr(&self) -> Option<f64> {
    mean(self.scored().map(|f| f.psnr.db()))
  }

  pub fn mean_recon_psnr(&self) -> Option<f64> {
    mean(self.scored().map(|f| f.recon_psnr.db()))
  }

  /// Luma PSNR of the predictions over all scored frames pooled into one
  /// MSE.
  pub fn pooled_psnr(&self) -> Option<Psnr> {
    pooled(self.scored().map(|f| (f, f.sse)))
  }

  /// As [`pooled_psnr`](Self::pooled_psnr), for the reconstructions.
  pub fn pooled_recon_psnr(&self) -> Option<Psnr> {
    pooled(self.scored().map(|f| (f, f.recon_sse)))
  }
}

/// PSNR of the luma MSE pooled over `(frame, sse)` pairs from any number of
/// GOPs; `None` if there are none.
pub fn pooled<'a>(frames: impl IntoIterator<Item = (&'a FrameResult, u64)>) -> Option<Psnr> {
  let mut sse = 0u64;
  let mut count = 0usize;
  let mut max = 0f64;
  for (f, s) in frames {
    sse += s;
    count += f.predicted.width() * f.predicted.height();
    max = f.predicted.max_value() as f64;
  }
  (count > 0).then(|| Psnr::from_mse(sse as f64 / count as f64, max))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
  let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
  (n > 0).then(|| sum / n as f64)
}

/// How the enhancement/residual layer was costed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualBits {
  /// Bits measured by an external encoder.
  External(u64),
  /// Entropy of the dead-zone-quantized residual.
  Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TotalBits {
  pub side_info: u64,
  pub residual: u64,
  pub total: u64,
  pub method: ResidualBits,
}

/// Side information plus residual bits.
pub fn total_bits(result: &GopResult, residual_bits: ResidualBits) -> TotalBits {
  let side_info = result.side_info_bits();
  let residual = match residual_bits {
    ResidualBits::External(b) => b,
    ResidualBits::Estimated => result.residual_bits(),
  };
  TotalBits { side_info, residual, total: side_info + residual, method: residual_bits }
}

/// Dead-zone quantization: `sign(r) * floor(|r| / step)`.
#[inline]
pub fn quantize(r: i32, step: u32) -> i32 {
  r.signum() * (r.unsigned_abs() / step) as i32
}

/// `ceil` of the zeroth-order entropy, in bits, of each quantized residual
/// plane, summed over planes.
pub fn residual_entropy_bits(res: &Residual, step: u32) -> u64 {
  res
    .planes
    .iter()
    .map(|p| {
      let mut hist = BTreeMap::new();
      for &r in &p.data {
        *hist.entry(quantize(r, step)).or_insert(0u64) += 1;
      }
      let n = p.data.len() as f64;
      let bits: f64 = hist.values().map(|&c| -(c as f64) * (c as f64 / n).log2()).sum();
      bits.max(0.0).ceil() as u64
    })
    .sum()
}

/// Prediction plus dequantized residual, clamped to the sample range.
fn reconstruct(res: &Residual, predicted: &Frame, step: u32) -> Result<Frame> {
  let mut q = res.clone();
  for p in &mut q.planes {
    for r in &mut p.data {
      *r = quantize(*r, step) * step as i32;
    }
  }
  q.reconstruct(predicted)
}

fn scored_frame(
  index: usize,
  role: FrameRole,
  original: &Frame,
  predicted: Frame,
  field: Option<MotionField>,
  tree_bits: u64,
  motion_bits: u64,
  step: u32,
) -> Result<FrameResult> {
  let res = residual(original, &predicted)?;
  let recon = reconstruct(&res, &predicted, step)?;
  Ok(FrameResult {
    index,
    role,
    recon_sse: sse_region(original, &recon, Cuboid::full(original.width(), original.height()), 0)?,
    recon_psnr: psnr(original, &recon, ChannelPolicy::LumaOnly)?,
    sse: res.sse,
    psnr: res.psnr,
    residual_bits: residual_entropy_bits(&res, step),
    predicted,
    field,
    tree_bits,
    motion_bits,
  })
}

fn check_gop(gop: &[Frame]) -> Result<()> {
  let first = gop.first().ok_or_else(|| Error::Config("empty GOP".into()))?;
  for f in &gop[1..] {
    first.check_same_layout(f)?;
  }
  Ok(())
}

pub fn run_gop(gop: &[Frame], config: &PipelineConfig) -> Result<GopResult> {
  config.validate()?;
  check_gop(gop)?;
  let (w, h) = (gop[0].width(), gop[0].height());
  let step = config.quant_step;

  let cut = |f: &Frame| -> Result<CuboidPartition> {
    partition_with(f, config.cuboid_count(w, h)?, config.channels)
  };

  if config.scheme == Scheme::Coarse {
    let frames = gop
      .par_iter()
      .enumerate()
      .map(|(i, f)| {
        let p = cut(f)?;
        let coarse = coarsen(f, &p)?;
        scored_frame(i, FrameRole::Coarse, f, coarse, None, tree_bit_cost(p.tree()), 0, step)
      })
      .collect::<Result<Vec<_>>>()?;
    return Ok(GopResult { frames, quant_step: step });
  }

  // regions for every frame, plus the tree bits they cost
  let regions: Vec<(Vec<Cuboid>, u64)> = match (config.scheme, config.partition_source) {
    (Scheme::FixedBlock, _) => vec![(fixed_block_grid(w, h, config.block_size), 0)],
    (_, PartitionSource::AnchorOnly) => {
      let p = cut(&gop[0])?;
      vec![(p.cuboids().to_vec(), tree_bit_cost(p.tree()))]
    }
    (_, PartitionSource::PerFrame) => gop
      .par_iter()
      .map(|f| cut(f).map(|p| (p.cuboids().to_vec(), tree_bit_cost(p.tree()))))
      .collect::<Result<_>>()?,
  };
  let regions_for = |k: usize| &regions[k.min(regions.len() - 1)];

  let mut frames = Vec::with_capacity(gop.len());
  frames.push(FrameResult {
    index: 0,
    role: FrameRole::Anchor,
    predicted: gop[0].clone(),
    field: None,
    sse: 0,
    psnr: Psnr::Infinite,
    recon_sse: 0,
    recon_psnr: Psnr::Infinite,
    tree_bits: regions_for(0).1,
    motion_bits: 0,
    residual_bits: 0,
  });
  for k in 1..gop.len() {
    let reference = match config.reference_mode {
      ReferenceMode::ChainedPredicted => &frames[k - 1].predicted,
      ReferenceMode::PreviousOriginal => &gop[k - 1],
    };
    let (cuboids, tree_bits) = regions_for(k);
    let tree_bits = match config.partition_source {
      PartitionSource::PerFrame => *tree_bits,
      PartitionSource::AnchorOnly => 0,
    };
    let field = estimate_motion(&gop[k], reference, cuboids, &config.search)?;
    let predicted = compensate(reference, &field)?;
    let motion_bits = motion_bit_cost(&field, &config.search);
    frames.push(scored_frame(
      k,
      FrameRole::Predicted,
      &gop[k],
      predicted,
      Some(field),
      tree_bits,
      motion_bits,
      step,
    )?);
  }
  Ok(GopResult { frames, quant_step: step })
}

/// Runs consecutive GOPs of `config.gop_size` frames; the last GOP may be
/// shorter. GOPs are processed in parallel.
pub fn run_sequence(frames: &[Frame], config: &PipelineConfig) -> Result<Vec<GopResult>> {
  config.validate()?;
  frames.par_chunks(config.gop_size).map(|g| run_gop(g, config)).collect()
}

#[cfg(test)]
mod tests {
  use super::*;
  use crate::synth::MovingRectangle;

  fn small_config(scheme: Scheme) -> PipelineConfig {
    PipelineConfig {
      gop_size: 4,
      n_cuboids: Some(16),
      block_size: 16,
      scheme,
      partition_source: if scheme == Scheme::Coarse {
        PartitionSource::PerFrame
      } else {
        PartitionSource::AnchorOnly
      },
      search: SearchConfig { range: 4, ..Default::default() },
      ..Default::default()
    }
  }

  #[test]
  fn static_gop_is_predicted_exactly() {
    let f = MovingRectangle { frames: 1, ..MovingRectangle::small() }.generate().remove(0);
    let gop = vec![f.clone(), f.clone(), f];
    let r = run_gop(&gop, &small_config(Scheme::Cuboid)).unwrap();
    for fr in &r.frames[1..] {
      assert_eq!(fr.psnr, Psnr::Infinite);
      assert!(fr.field.as_ref().unwrap().vectors.iter().all(|v| v.dx == 0 && v.dy == 0));
      assert_eq!(fr.residual_bits, 0);
    }
    assert_eq!(r.frames[0].role, FrameRole::Anchor);
  }

  #[test]
  fn translating_square_on_flat_background_is_exact() {
    let seq = MovingRectangle {
      frames: 3,
      background_wave: 0,
      background_grain: 0,
      ..MovingRectangle::small()
    }
    .generate();
    let r = run_gop(&seq, &small_config(Scheme::Cuboid)).unwrap();
    for fr in &r.frames[1..] {
      assert_eq!(fr.sse, 0, "frame {}", fr.index);
    }
  }

  #[test]
  fn per_frame_costs_more_side_info() {
    let seq = MovingRectangle { frames: 3, ..MovingRectangle::small() }.generate();
    let anchor = run_gop(&seq, &small_config(Scheme::Cuboid)).unwrap();
    let per = run_gop(
      &seq,
      &PipelineConfig {
        partition_source: PartitionSource::PerFrame,
        ..small_config(Scheme::Cuboid)
      },
    )
    .unwrap();
    assert!(per.side_info_bits() > anchor.side_info_bits());
    assert_eq!(anchor.tree_bits(), anchor.frames[0].tree_bits);
  }

  #[test]
  fn coarse_scheme_has_no_motion_bits() {
    let seq = MovingRectangle { frames: 3, ..MovingRectangle::small() }.generate();
    let r = run_gop(&seq, &small_config(Scheme::Coarse)).unwrap();
    assert_eq!(r.motion_bits(), 0);
    assert!(r.frames.iter().all(|f| f.role == FrameRole::Coarse && f.field.is_none()));
    assert_eq!(r.side_info_bits(), r.tree_bits());
    assert!(r.tree_bits() > 0);
  }

  #[test]
  fn fixed_block_has_no_tree_bits() {
    let seq = MovingRectangle { frames: 3, ..MovingRectangle::small() }.generate();
    let r = run_gop(&seq, &small_config(Scheme::FixedBlock)).unwrap();
    assert_eq!(r.tree_bits(), 0);
    // 16 blocks of 16x16 on 64x64, 2 P-frames, range 4 -> 2 * 4 bits each
    assert_eq!(r.motion_bits(), 2 * 16 * 8);
  }

  #[test]
  fn inconsistent_configs_rejected() {
    let seq = MovingRectangle { frames: 2, ..MovingRectangle::small() }.generate();
    let bad = [
      PipelineConfig {
        partition_source: PartitionSource::AnchorOnly,
        ..small_config(Scheme::Coarse)
      },
      PipelineConfig {
        partition_source: PartitionSource::PerFrame,
        ..small_config(Scheme::FixedBlock)
      },
      PipelineConfig { gop_size: 0, ..small_config(Scheme::Cuboid) },
      PipelineConfig { n_cuboids: Some(0), ..small_config(Scheme::Cuboid) },
      PipelineConfig { quant_step: 0, ..small_config(Scheme::Cuboid) },
    ];
    for c in bad {
      assert!(matches!(run_gop(&seq, &c), Err(Error::Config(_))), "{c:?}");
    }
    assert!(run_gop(&[], &small_config(Scheme::Cuboid)).is_err());
  }

  #[test]
  fn total_bits_composition() {
    let frame = Frame::gray8(2, 2, &[0; 4]).unwrap();
    let fr = |role, tree_bits, motion_bits| FrameResult {
      index: 0,
      role,
      predicted: frame.clone(),
      field: None,
      sse: 0,
      psnr: Psnr::Infinite,
      recon_sse: 0,
      recon_psnr: Psnr::Infinite,
      tree_bits,
      motion_bits,
      residual_bits: 0,
    };
    let mut frames = vec![fr(FrameRole::Anchor, 226, 0)];
    frames.extend((0..9).map(|_| fr(FrameRole::Predicted, 0, 48)));
    let r = GopResult { frames, quant_step: 1 };
    assert_eq!(total_bits(&r, ResidualBits::Estimated).total, 658);
    let ext = total_bits(&r, ResidualBits::External(1000));
    assert_eq!((ext.side_info, ext.residual, ext.total), (658, 1000, 1658));
  }

  #[test]
  fn entropy_estimate() {
    let res = Residual {
      planes: vec![crate::motion::ResidualPlane { width: 4, height: 1, data: vec![0, 0, 3, -3] }],
      sse: 18,
      psnr: Psnr::Finite(0.0),
    };
    // symbols {0: 2, 3: 1, -3: 1} -> 1.5 bits/sample * 4 = 6 bits
    assert_eq!(residual_entropy_bits(&res, 1), 6);
    // step 4 quantizes everything to zero
    assert_eq!(residual_entropy_bits(&res, 4), 0);
    assert_eq!(quantize(-7, 2), -3);
  }

  #[test]
  fn sequence_runs_in_gops() {
    let seq = MovingRectangle { frames: 5, ..MovingRectangle::small() }.generate();
    let out =
      run_sequence(&seq, &PipelineConfig { gop_size: 2, ..small_config(Scheme::Cuboid) }).unwrap();
    assert_eq!(out.iter().map(|g| g.frames.len()).collect::<Vec<_>>(), vec![2, 2, 1]);
  }
}
