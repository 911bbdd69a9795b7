//! Full-search integer-pel motion estimation over arbitrary rectangles, and
//! motion-compensated prediction.
//!
//! Reference samples outside the frame are fetched with their coordinates
//! clamped to the frame edge, so every displacement in the search window is a
//! valid candidate for every region.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::ceil_log2;
use crate::cuboid::{check_tiling, Cuboid};
use crate::error::{Error, Result};
use crate::frame::{ChannelPolicy, Frame, Plane, Psnr};

/// Displacement from a region of the current frame to its match in the
/// reference: the reference position is `current + (dx, dy)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MotionVector {
  pub dx: i32,
  pub dy: i32,
}

impl MotionVector {
  pub const ZERO: MotionVector = MotionVector { dx: 0, dy: 0 };

  pub const fn new(dx: i32, dy: i32) -> Self {
    Self { dx, dy }
  }

  /// Vector on a plane decimated by `2^sx` x `2^sy`, truncated toward zero.
  pub fn scaled(self, sx: u32, sy: u32) -> Self {
    Self { dx: self.dx / (1 << sx), dy: self.dy / (1 << sy) }
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
  #[default]
  Sse,
  Sad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgePolicy {
  /// Out-of-frame reference coordinates are clamped to the nearest edge
  /// sample.
  #[default]
  Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
  /// Search window half-width in pixels, applied to both axes.
  pub range: u32,
  pub metric: Metric,
  pub edge_policy: EdgePolicy,
}

impl Default for SearchConfig {
  fn default() -> Self {
    Self { range: 16, metric: Metric::Sse, edge_policy: EdgePolicy::Clamp }
  }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotionField {
  pub regions: Vec<Cuboid>,
  pub vectors: Vec<MotionVector>,
  /// Luma matching cost of each region under the search metric.
  pub costs: Vec<u64>,
}

impl MotionField {
  pub fn len(&self) -> usize {
    self.regions.len()
  }

  pub fn is_empty(&self) -> bool {
    self.regions.is_empty()
  }

  /// All-zero field over `regions`.
  pub fn zero(regions: Vec<Cuboid>) -> Self {
    let n = regions.len();
    Self { regions, vectors: vec![MotionVector::ZERO; n], costs: vec![0; n] }
  }

  pub fn total_cost(&self) -> u64 {
    self.costs.iter().sum()
  }
}

/// Row-major grid of `block` x `block` regions; the last column and row are
/// narrower when the frame size is not a multiple of `block`.
pub fn fixed_block_grid(width: usize, height: usize, block: usize) -> Vec<Cuboid> {
  assert!(block >= 1, "block size must be positive");
  let mut out = Vec::with_capacity(width.div_ceil(block) * height.div_ceil(block));
  for y in (0..height).step_by(block) {
    for x in (0..width).step_by(block) {
      out.push(Cuboid::new(x, y, block.min(width - x), block.min(height - y)));
    }
  }
  out
}

#[inline]
fn accumulate(metric: Metric, a: &[u16], b: &[u16]) -> u64 {
  match metric {
    Metric::Sse => a
      .iter()
      .zip(b)
      .map(|(&p, &q)| {
        let d = p as i64 - q as i64;
        (d * d) as u64
      })
      .sum(),
    Metric::Sad => a.iter().zip(b).map(|(&p, &q)| (p as i64 - q as i64).unsigned_abs()).sum(),
  }
}

/// Cost of matching `region` of `cur` against `reference` displaced by `mv`.
/// Gives up early, returning a value above `limit`, once the partial sum
/// exceeds `limit`.
fn region_cost(
  cur: &Plane,
  reference: &Plane,
  region: Cuboid,
  mv: MotionVector,
  metric: Metric,
  limit: u64,
) -> u64 {
  let rx = region.x as isize + mv.dx as isize;
  let ry = region.y as isize + mv.dy as isize;
  let inside = rx >= 0
    && ry >= 0
    && rx as usize + region.w <= reference.width()
    && ry as usize + region.h <= reference.height();
  let mut cost = 0u64;
  let mut row = Vec::new();
  for j in 0..region.h {
    let c = &cur.row(region.y + j)[region.x..region.right()];
    let r: &[u16] = if inside {
      let ry = ry as usize + j;
      &reference.row(ry)[rx as usize..rx as usize + region.w]
    } else {
      row.clear();
      row.extend((0..region.w).map(|i| reference.get_clamped(rx + i as isize, ry + j as isize)));
      &row
    };
    cost += accumulate(metric, c, r);
    if cost > limit {
      return cost;
    }
  }
  cost
}

/// Orders candidates: lower cost, then shorter `|dx| + |dy|`, then smaller
/// `dy`, then smaller `dx`.
#[inline]
fn candidate_key(cost: u64, mv: MotionVector) -> (u64, u32, i32, i32) {
  (cost, mv.dx.unsigned_abs() + mv.dy.unsigned_abs(), mv.dy, mv.dx)
}

/// Exhaustive search of the `(2 * range + 1)^2` window for one region.
pub fn search_region(
  current: &Plane,
  reference: &Plane,
  region: Cuboid,
  config: &SearchConfig,
) -> (MotionVector, u64) {
  let r = config.range as i32;
  let zero_cost =
    region_cost(current, reference, region, MotionVector::ZERO, config.metric, u64::MAX);
  let mut best = (MotionVector::ZERO, zero_cost);
  for dy in -r..=r {
    for dx in -r..=r {
      let mv = MotionVector::new(dx, dy);
      if mv == MotionVector::ZERO {
        continue;
      }
      let cost = region_cost(current, reference, region, mv, config.metric, best.1);
      if candidate_key(cost, mv) < candidate_key(best.1, best.0) {
        best = (mv, cost);
      }
    }
  }
  best
}

/// Estimates one vector per region on the luma plane. Regions are searched
/// in parallel; the result does not depend on scheduling.
pub fn estimate_motion(
  current: &Frame,
  reference: &Frame,
  regions: &[Cuboid],
  config: &SearchConfig,
) -> Result<MotionField> {
  current.check_same_layout(reference)?;
  check_tiling(regions, current.width(), current.height())?;
  let (cur, refp) = (current.luma(), reference.luma());
  let found: Vec<(MotionVector, u64)> =
    regions.par_iter().map(|&r| search_region(cur, refp, r, config)).collect();
  let (vectors, costs) = found.into_iter().unzip();
  Ok(MotionField { regions: regions.to_vec(), vectors, costs })
}

/// Builds the prediction by copying each displaced region of `reference`.
/// Subsampled planes use the mapped regions and vectors truncated toward
/// zero.
pub fn compensate(reference: &Frame, field: &MotionField) -> Result<Frame> {
  if field.regions.len() != field.vectors.len() {
    return Err(Error::ShapeMismatch(format!(
      "{} regions but {} vectors",
      field.regions.len(),
      field.vectors.len()
    )));
  }
  check_tiling(&field.regions, reference.width(), reference.height())?;
  let mut out = reference.clone();
  for c in 0..reference.channels() {
    let (sx, sy) = reference.channel_shifts(c);
    let src = &reference.planes()[c];
    let dst = &mut out.planes_mut()[c];
    let stride = dst.width();
    for (region, mv) in field.regions.iter().zip(&field.vectors) {
      let region = region.subsampled(sx, sy);
      let mv = mv.scaled(sx, sy);
      for y in region.y..region.bottom() {
        let sy = y as isize + mv.dy as isize;
        for x in region.x..region.right() {
          dst.data_mut()[y * stride + x] = src.get_clamped(x as isize + mv.dx as isize, sy);
        }
      }
    }
  }
  Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualPlane {
  pub width: usize,
  pub height: usize,
  pub data: Vec<i32>,
}

/// Signed `current - predicted` per plane, with luma statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
  pub planes: Vec<ResidualPlane>,
  /// Luma SSE of the prediction.
  pub sse: u64,
  /// Luma PSNR of the prediction against the current frame.
  pub psnr: Psnr,
}

impl Residual {
  /// `predicted + residual`, clamped to the sample range.
  pub fn reconstruct(&self, predicted: &Frame) -> Result<Frame> {
    let mut out = predicted.clone();
    let max = predicted.max_value() as i32;
    if self.planes.len() != out.channels() {
      return Err(Error::ShapeMismatch("residual channel count differs".into()));
    }
    for (p, r) in out.planes_mut().iter_mut().zip(&self.planes) {
      if p.data().len() != r.data.len() {
        return Err(Error::ShapeMismatch("residual plane size differs".into()));
      }
      for (s, &d) in p.data_mut().iter_mut().zip(&r.data) {
        *s = (*s as i32 + d).clamp(0, max) as u16;
      }
    }
    Ok(out)
  }
}

pub fn residual(current: &Frame, predicted: &Frame) -> Result<Residual> {
  current.check_same_layout(predicted)?;
  let planes: Vec<ResidualPlane> = current
    .planes()
    .iter()
    .zip(predicted.planes())
    .map(|(c, p)| ResidualPlane {
      width: c.width(),
      height: c.height(),
      data: c.data().iter().zip(p.data()).map(|(&a, &b)| a as i32 - b as i32).collect(),
    })
    .collect();
  let sse = planes[0].data.iter().map(|&d| (d as i64 * d as i64) as u64).sum();
  let psnr = crate::frame::psnr(current, predicted, ChannelPolicy::LumaOnly)?;
  Ok(Residual { planes, sse, psnr })
}

/// Bits per vector component for a `range` window.
pub fn component_bits(range: u32) -> u32 {
  ceil_log2(2 * range as u64 + 1)
}

/// Fixed-width vector coding: `2 * ceil(log2(2 * range + 1))` bits per
/// region.
pub fn motion_bit_cost(field: &MotionField, config: &SearchConfig) -> u64 {
  field.len() as u64 * 2 * component_bits(config.range) as u64
}

/// Text dump: `x y w h dx dy cost` per region.
pub fn dump_motion_field(field: &MotionField) -> String {
  let mut s = String::new();
  for ((r, v), c) in field.regions.iter().zip(&field.vectors).zip(&field.costs) {
    let _ = writeln!(s, "{} {} {} {} {} {} {}", r.x, r.y, r.w, r.h, v.dx, v.dy, c);
  }
  s
}
