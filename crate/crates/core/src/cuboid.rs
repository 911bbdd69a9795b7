use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle of pixels: `[x, x + w) x [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cuboid {
  pub x: usize,
  pub y: usize,
  pub w: usize,
  pub h: usize,
}

impl Cuboid {
  pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
    Self { x, y, w, h }
  }

  pub const fn full(width: usize, height: usize) -> Self {
    Self { x: 0, y: 0, w: width, h: height }
  }

  #[inline]
  pub const fn area(&self) -> usize {
    self.w * self.h
  }

  #[inline]
  pub const fn right(&self) -> usize {
    self.x + self.w
  }

  #[inline]
  pub const fn bottom(&self) -> usize {
    self.y + self.h
  }

  pub const fn is_empty(&self) -> bool {
    self.w == 0 || self.h == 0
  }

  pub fn fits(&self, width: usize, height: usize) -> bool {
    self.right() <= width && self.bottom() <= height
  }

  pub(crate) fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
    if self.is_empty() || !self.fits(width, height) {
      return Err(Error::OutOfBounds { region: *self, width, height });
    }
    Ok(())
  }

  /// Maps a luma-grid rectangle onto a plane subsampled by `2^shift_x` by
  /// `2^shift_y`. A subsampled sample belongs to the rectangle containing its
  /// co-sited luma sample, so the images of a luma tiling tile the subsampled
  /// plane. The result may be empty for 1-pixel-wide rectangles.
  pub fn subsampled(&self, shift_x: u32, shift_y: u32) -> Cuboid {
    let ceil = |v: usize, s: u32| (v + (1 << s) - 1) >> s;
    let x0 = ceil(self.x, shift_x);
    let x1 = ceil(self.right(), shift_x);
    let y0 = ceil(self.y, shift_y);
    let y1 = ceil(self.bottom(), shift_y);
    Cuboid::new(x0, y0, x1 - x0, y1 - y0)
  }
}

impl fmt::Display for Cuboid {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{}x{}@({},{})", self.w, self.h, self.x, self.y)
  }
}

/// Checks that `regions` cover a `width` x `height` raster exactly once.
pub fn check_tiling(regions: &[Cuboid], width: usize, height: usize) -> Result<()> {
  let mut covered = vec![false; width * height];
  let mut total = 0usize;
  for r in regions {
    if r.is_empty() || !r.fits(width, height) {
      return Err(Error::NotTiling(format!("region {r} is empty or outside {width}x{height}")));
    }
    for row in r.y..r.bottom() {
      for c in &mut covered[row * width + r.x..row * width + r.right()] {
        if *c {
          return Err(Error::NotTiling(format!("region {r} overlaps another region")));
        }
        *c = true;
      }
    }
    total += r.area();
  }
  if total != width * height {
    return Err(Error::NotTiling(format!("regions cover {total} of {} pixels", width * height)));
  }
  Ok(())
}

#[cfg(test)]
mod tests {
  use super::*;

  #[test]
  fn subsampled_regions_tile_chroma_plane() {
    // odd split positions on a 7x5 luma plane
    let regions = [
      Cuboid::new(0, 0, 3, 5),
      Cuboid::new(3, 0, 1, 2),
      Cuboid::new(3, 2, 1, 3),
      Cuboid::new(4, 0, 3, 5),
    ];
    check_tiling(&regions, 7, 5).unwrap();
    let mut chroma: Vec<Cuboid> =
      regions.iter().map(|r| r.subsampled(1, 1)).filter(|r| !r.is_empty()).collect();
    chroma.sort();
    check_tiling(&chroma, 4, 3).unwrap();
  }

  #[test]
  fn tiling_detects_gaps_and_overlaps() {
    assert!(check_tiling(&[Cuboid::new(0, 0, 2, 1)], 2, 2).is_err());
    assert!(check_tiling(&[Cuboid::full(2, 2), Cuboid::new(1, 1, 1, 1)], 2, 2).is_err());
    assert!(check_tiling(&[Cuboid::new(0, 0, 3, 1)], 2, 1).is_err());
  }
}
