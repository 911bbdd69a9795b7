//! Summed-area tables of samples and squared samples, for O(1) rectangle
//! statistics.

use crate::cuboid::Cuboid;
use crate::error::{Error, Result};
use crate::frame::{ChannelPolicy, Frame, Plane};

#[derive(Debug, Clone)]
struct ChannelTable {
  sum: Vec<u64>,
  sum_sq: Vec<u64>,
}

/// Per-channel prefix sums over a `(width + 1) x (height + 1)` grid. Entry
/// `(x, y)` holds the total over samples strictly above and left of `(x, y)`.
#[derive(Debug, Clone)]
pub struct IntegralTables {
  width: usize,
  height: usize,
  tables: Vec<ChannelTable>,
}

impl IntegralTables {
  /// Tables over every channel stored at luma resolution.
  pub fn new(frame: &Frame) -> Self {
    Self::with_policy(frame, ChannelPolicy::AllChannels)
  }

  /// Subsampled chroma planes never participate: a split position on the luma
  /// grid has no exact counterpart on them.
  pub fn with_policy(frame: &Frame, policy: ChannelPolicy) -> Self {
    let planes: Vec<&Plane> = match policy {
      ChannelPolicy::LumaOnly => vec![frame.luma()],
      ChannelPolicy::AllChannels => frame
        .planes()
        .iter()
        .filter(|p| p.width() == frame.width() && p.height() == frame.height())
        .collect(),
    };
    let tables = planes.into_iter().map(build_channel).collect();
    Self { width: frame.width(), height: frame.height(), tables }
  }

  pub fn width(&self) -> usize {
    self.width
  }

  pub fn height(&self) -> usize {
    self.height
  }

  pub fn channels(&self) -> usize {
    self.tables.len()
  }

  #[inline]
  fn query(&self, table: &[u64], r: Cuboid) -> u64 {
    let stride = self.width + 1;
    let (x0, y0, x1, y1) = (r.x, r.y, r.right(), r.bottom());
    table[y1 * stride + x1] + table[y0 * stride + x0]
      - table[y0 * stride + x1]
      - table[y1 * stride + x0]
  }

  /// Sum of samples of `channel` inside `r`. `r` must be within bounds.
  #[inline]
  pub fn rect_sum(&self, channel: usize, r: Cuboid) -> u64 {
    self.query(&self.tables[channel].sum, r)
  }

  /// Sum of squared samples of `channel` inside `r`.
  #[inline]
  pub fn rect_sum_sq(&self, channel: usize, r: Cuboid) -> u64 {
    self.query(&self.tables[channel].sum_sq, r)
  }

  pub(crate) fn check(&self, r: Cuboid) -> Result<()> {
    r.check_bounds(self.width, self.height)
  }

  /// SSE of `region` around its own mean on one channel.
  pub fn region_sse(&self, region: Cuboid, channel: usize) -> Result<f64> {
    self.check(region)?;
    if channel >= self.tables.len() {
      return Err(Error::NoSuchChannel { channel, channels: self.tables.len() });
    }
    Ok(self.region_sse_unchecked(region, channel))
  }

  /// `sum(p^2) - sum(p)^2 / area`, evaluated as an exact integer numerator
  /// followed by a single rounding division.
  #[inline]
  pub(crate) fn region_sse_unchecked(&self, region: Cuboid, channel: usize) -> f64 {
    let area = region.area() as u128;
    let s = self.rect_sum(channel, region) as u128;
    let sq = self.rect_sum_sq(channel, region) as u128;
    let num = area * sq - s * s;
    num as f64 / area as f64
  }

  /// SSE summed over all tabulated channels.
  pub fn region_sse_all(&self, region: Cuboid) -> Result<f64> {
    self.check(region)?;
    Ok(self.region_sse_all_unchecked(region))
  }

  #[inline]
  pub(crate) fn region_sse_all_unchecked(&self, region: Cuboid) -> f64 {
    (0..self.tables.len()).map(|c| self.region_sse_unchecked(region, c)).sum()
  }
}

fn build_channel(plane: &Plane) -> ChannelTable {
  let (w, h) = (plane.width(), plane.height());
  let stride = w + 1;
  let mut sum = vec![0u64; stride * (h + 1)];
  let mut sum_sq = vec![0u64; stride * (h + 1)];
  for y in 0..h {
    let mut row_sum = 0u64;
    let mut row_sq = 0u64;
    for (x, &s) in plane.row(y).iter().enumerate() {
      row_sum += s as u64;
      row_sq += s as u64 * s as u64;
      let above = y * stride + x + 1;
      let here = (y + 1) * stride + x + 1;
      sum[here] = sum[above] + row_sum;
      sum_sq[here] = sum_sq[above] + row_sq;
    }
  }
  ChannelTable { sum, sum_sq }
}
