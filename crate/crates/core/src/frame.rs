//! Frame and sequence containers plus the pixel-level distortion metrics the
//! rest of the crate builds on.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cuboid::Cuboid;
use crate::error::{Error, Result};

pub type Sample = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChromaSubsampling {
  #[serde(rename = "444")]
  Cs444,
  #[serde(rename = "420")]
  Cs420,
}

impl ChromaSubsampling {
  /// Log2 decimation factors `(x, y)` applied to planes after the first.
  pub const fn shifts(self) -> (u32, u32) {
    match self {
      ChromaSubsampling::Cs444 => (0, 0),
      ChromaSubsampling::Cs420 => (1, 1),
    }
  }
}

/// A single row-major sample plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
  width: usize,
  height: usize,
  data: Vec<Sample>,
}

impl Plane {
  pub fn new(width: usize, height: usize, data: Vec<Sample>) -> Result<Self> {
    if data.len() != width * height {
      return Err(Error::InvalidFrame(format!(
        "plane of {width}x{height} needs {} samples, got {}",
        width * height,
        data.len()
      )));
    }
    Ok(Self { width, height, data })
  }

  pub fn filled(width: usize, height: usize, value: Sample) -> Self {
    Self { width, height, data: vec![value; width * height] }
  }

  #[inline]
  pub fn width(&self) -> usize {
    self.width
  }

  #[inline]
  pub fn height(&self) -> usize {
    self.height
  }

  #[inline]
  pub fn data(&self) -> &[Sample] {
    &self.data
  }

  #[inline]
  pub fn data_mut(&mut self) -> &mut [Sample] {
    &mut self.data
  }

  #[inline]
  pub fn row(&self, y: usize) -> &[Sample] {
    &self.data[y * self.width..(y + 1) * self.width]
  }

  #[inline]
  pub fn get(&self, x: usize, y: usize) -> Sample {
    self.data[y * self.width + x]
  }

  /// Sample at `(x, y)` with both coordinates clamped into the plane.
  #[inline]
  pub fn get_clamped(&self, x: isize, y: isize) -> Sample {
    let x = x.clamp(0, self.width as isize - 1) as usize;
    let y = y.clamp(0, self.height as isize - 1) as usize;
    self.data[y * self.width + x]
  }

  #[inline]
  pub fn set(&mut self, x: usize, y: usize, v: Sample) {
    self.data[y * self.width + x] = v;
  }
}

/// A multi-channel raster. Channel 0 is luma (or the only channel of a
/// grayscale frame); for 4:2:0 frames the remaining planes are decimated by
/// two in both directions, rounding the plane size up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
  width: usize,
  height: usize,
  bit_depth: u8,
  subsampling: ChromaSubsampling,
  planes: Vec<Plane>,
}

impl Frame {
  pub fn new(
    width: usize,
    height: usize,
    bit_depth: u8,
    subsampling: ChromaSubsampling,
    planes: Vec<Plane>,
  ) -> Result<Self> {
    if width == 0 || height == 0 {
      return Err(Error::ZeroDimensions { width, height });
    }
    if !(1..=16).contains(&bit_depth) {
      return Err(Error::InvalidFrame(format!("unsupported bit depth {bit_depth}")));
    }
    if planes.is_empty() {
      return Err(Error::InvalidFrame("frame needs at least one plane".into()));
    }
    let max = ((1u32 << bit_depth) - 1) as Sample;
    for (i, p) in planes.iter().enumerate() {
      let (w, h) = plane_dims(width, height, subsampling, i);
      if p.width != w || p.height != h {
        return Err(Error::InvalidFrame(format!(
          "plane {i} is {}x{}, expected {w}x{h}",
          p.width, p.height
        )));
      }
      if p.data.iter().any(|&s| s > max) {
        return Err(Error::InvalidFrame(format!(
          "plane {i} has samples above {max} for bit depth {bit_depth}"
        )));
      }
    }
    Ok(Self { width, height, bit_depth, subsampling, planes })
  }

  /// Single-channel 8-bit frame from row-major samples.
  pub fn gray8(width: usize, height: usize, samples: &[u8]) -> Result<Self> {
    let plane = Plane::new(width, height, samples.iter().map(|&s| s as Sample).collect())?;
    Frame::new(width, height, 8, ChromaSubsampling::Cs444, vec![plane])
  }

  /// Frame of the given layout with every sample set to `value`.
  pub fn filled(
    width: usize,
    height: usize,
    channels: usize,
    bit_depth: u8,
    subsampling: ChromaSubsampling,
    value: Sample,
  ) -> Result<Self> {
    let planes = (0..channels)
      .map(|i| {
        let (w, h) = plane_dims(width, height, subsampling, i);
        Plane::filled(w, h, value)
      })
      .collect();
    Frame::new(width, height, bit_depth, subsampling, planes)
  }

  #[inline]
  pub fn width(&self) -> usize {
    self.width
  }

  #[inline]
  pub fn height(&self) -> usize {
    self.height
  }

  #[inline]
  pub fn channels(&self) -> usize {
    self.planes.len()
  }

  #[inline]
  pub fn bit_depth(&self) -> u8 {
    self.bit_depth
  }

  #[inline]
  pub fn subsampling(&self) -> ChromaSubsampling {
    self.subsampling
  }

  #[inline]
  pub fn max_value(&self) -> Sample {
    ((1u32 << self.bit_depth) - 1) as Sample
  }

  pub fn planes(&self) -> &[Plane] {
    &self.planes
  }

  pub fn plane(&self, channel: usize) -> Result<&Plane> {
    self.planes.get(channel).ok_or(Error::NoSuchChannel { channel, channels: self.planes.len() })
  }

  pub fn luma(&self) -> &Plane {
    &self.planes[0]
  }

  pub(crate) fn planes_mut(&mut self) -> &mut [Plane] {
    &mut self.planes
  }

  /// Log2 decimation of `channel` relative to the luma grid.
  pub fn channel_shifts(&self, channel: usize) -> (u32, u32) {
    if channel == 0 {
      (0, 0)
    } else {
      self.subsampling.shifts()
    }
  }

  pub fn same_layout(&self, other: &Frame) -> bool {
    self.width == other.width
      && self.height == other.height
      && self.bit_depth == other.bit_depth
      && self.subsampling == other.subsampling
      && self.planes.len() == other.planes.len()
  }

  pub(crate) fn check_same_layout(&self, other: &Frame) -> Result<()> {
    if !self.same_layout(other) {
      return Err(Error::ShapeMismatch(format!(
        "{}x{}x{} ({}-bit, {:?}) vs {}x{}x{} ({}-bit, {:?})",
        self.width,
        self.height,
        self.channels(),
        self.bit_depth,
        self.subsampling,
        other.width,
        other.height,
        other.channels(),
        other.bit_depth,
        other.subsampling
      )));
    }
    Ok(())
  }
}

pub(crate) fn plane_dims(
  width: usize,
  height: usize,
  subsampling: ChromaSubsampling,
  channel: usize,
) -> (usize, usize) {
  if channel == 0 {
    return (width, height);
  }
  let (sx, sy) = subsampling.shifts();
  ((width + (1 << sx) - 1) >> sx, (height + (1 << sy) - 1) >> sy)
}

/// Ordered frames sharing one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
  frames: Vec<Frame>,
  pub frame_rate: f64,
}

impl Sequence {
  pub fn new(frames: Vec<Frame>, frame_rate: f64) -> Result<Self> {
    if let Some(first) = frames.first() {
      for f in &frames[1..] {
        first.check_same_layout(f)?;
      }
    }
    Ok(Self { frames, frame_rate })
  }

  pub fn frames(&self) -> &[Frame] {
    &self.frames
  }

  pub fn into_frames(self) -> Vec<Frame> {
    self.frames
  }

  pub fn len(&self) -> usize {
    self.frames.len()
  }

  pub fn is_empty(&self) -> bool {
    self.frames.is_empty()
  }
}

/// Splits a sequence into groups of pictures. The anchor (intra) frame is
/// always the first frame of each group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GopLayout {
  pub gop_size: usize,
}

impl GopLayout {
  pub const ANCHOR_INDEX: usize = 0;

  pub fn new(gop_size: usize) -> Result<Self> {
    if gop_size == 0 {
      return Err(Error::Config("gop size must be at least 1".into()));
    }
    Ok(Self { gop_size })
  }

  /// Consecutive groups; the last one may be shorter.
  pub fn gops<'a>(&self, frames: &'a [Frame]) -> impl Iterator<Item = &'a [Frame]> {
    frames.chunks(self.gop_size)
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelPolicy {
  LumaOnly,
  AllChannels,
}

/// Peak signal-to-noise ratio. Identical inputs give [`Psnr::Infinite`]
/// rather than a capped number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
  Finite(f64),
  Infinite,
}

impl Psnr {
  pub fn from_mse(mse: f64, max_value: f64) -> Self {
    if mse <= 0.0 {
      Psnr::Infinite
    } else {
      Psnr::Finite(10.0 * (max_value * max_value / mse).log10())
    }
  }

  /// Decibels, with `f64::INFINITY` for the infinite marker.
  pub fn db(self) -> f64 {
    match self {
      Psnr::Finite(v) => v,
      Psnr::Infinite => f64::INFINITY,
    }
  }

  pub fn is_finite(self) -> bool {
    matches!(self, Psnr::Finite(_))
  }
}

impl fmt::Display for Psnr {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match self {
      Psnr::Finite(v) => write!(f, "{v:.4}"),
      Psnr::Infinite => f.write_str("inf"),
    }
  }
}

fn plane_sse(a: &Plane, b: &Plane) -> u64 {
  a.data
    .iter()
    .zip(&b.data)
    .map(|(&p, &q)| {
      let d = p as i64 - q as i64;
      (d * d) as u64
    })
    .sum()
}

pub fn psnr(a: &Frame, b: &Frame, policy: ChannelPolicy) -> Result<Psnr> {
  a.check_same_layout(b)?;
  let channels = match policy {
    ChannelPolicy::LumaOnly => 1,
    ChannelPolicy::AllChannels => a.channels(),
  };
  let (sse, count) = a.planes[..channels]
    .iter()
    .zip(&b.planes[..channels])
    .fold((0u64, 0usize), |(sse, n), (p, q)| (sse + plane_sse(p, q), n + p.data.len()));
  Ok(Psnr::from_mse(sse as f64 / count as f64, a.max_value() as f64))
}

/// Sum of squared sample differences over `region`, given in the coordinate
/// system of `channel`'s plane.
pub fn sse_region(a: &Frame, b: &Frame, region: Cuboid, channel: usize) -> Result<u64> {
  a.check_same_layout(b)?;
  let pa = a.plane(channel)?;
  let pb = b.plane(channel)?;
  region.check_bounds(pa.width, pa.height)?;
  let mut sse = 0u64;
  for y in region.y..region.bottom() {
    let ra = &pa.row(y)[region.x..region.right()];
    let rb = &pb.row(y)[region.x..region.right()];
    sse += ra
      .iter()
      .zip(rb)
      .map(|(&p, &q)| {
        let d = p as i64 - q as i64;
        (d * d) as u64
      })
      .sum::<u64>();
  }
  Ok(sse)
}
