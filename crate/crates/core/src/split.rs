//! Best binary split of a rectangle under the within-cuboid SSE criterion.
//!
//! Splitting a region of area `a` with channel sums `S_c` into children of
//! areas `a1`, `a2` and sums `S1_c`, `S2_c` lowers the SSE by
//!
//! ```text
//! gain = sum_c (S1_c * a2 - S2_c * a1)^2 / (a1 * a2 * a)
//! ```
//!
//! so candidates are ranked on that exact fraction. Minimising the children's
//! SSE and maximising the gain select the same split.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cuboid::Cuboid;
use crate::error::Result;
use crate::integral::IntegralTables;

/// Candidate counts above this are scanned in parallel.
const PARALLEL_CANDIDATES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
  /// Cut along a column: left and right children.
  Vertical,
  /// Cut along a row: top and bottom children.
  Horizontal,
}

/// Position of a split inside its region, without any statistics attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplitPos {
  pub axis: Axis,
  pub offset: usize,
}

impl SplitPos {
  pub const fn new(axis: Axis, offset: usize) -> Self {
    Self { axis, offset }
  }

  /// Number of candidate splits of a `w` x `h` region.
  pub const fn candidates(w: usize, h: usize) -> usize {
    (w + h).saturating_sub(2)
  }

  pub fn is_valid_for(&self, region: Cuboid) -> bool {
    let extent = match self.axis {
      Axis::Vertical => region.w,
      Axis::Horizontal => region.h,
    };
    self.offset >= 1 && self.offset < extent
  }

  /// Index into the candidate list: vertical offsets `1..w` first, then
  /// horizontal offsets `1..h`.
  pub fn index(&self, w: usize) -> usize {
    match self.axis {
      Axis::Vertical => self.offset - 1,
      Axis::Horizontal => w - 1 + self.offset - 1,
    }
  }

  pub fn from_index(index: usize, w: usize, h: usize) -> Option<Self> {
    if index >= Self::candidates(w, h) {
      return None;
    }
    Some(if index < w - 1 {
      SplitPos::new(Axis::Vertical, index + 1)
    } else {
      SplitPos::new(Axis::Horizontal, index - (w - 1) + 1)
    })
  }

  /// Children of `region`, left/top first.
  pub fn apply(&self, region: Cuboid) -> (Cuboid, Cuboid) {
    let Cuboid { x, y, w, h } = region;
    match self.axis {
      Axis::Vertical => {
        (Cuboid::new(x, y, self.offset, h), Cuboid::new(x + self.offset, y, w - self.offset, h))
      }
      Axis::Horizontal => {
        (Cuboid::new(x, y, w, self.offset), Cuboid::new(x, y + self.offset, w, h - self.offset))
      }
    }
  }
}

/// SSE reduction of a split as an exact fraction, with a floating-point
/// fallback for inputs whose numerators would overflow 128 bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Gain {
  exact: Option<(u128, u128)>,
  approx: f64,
}

impl Gain {
  pub(crate) fn value(&self) -> f64 {
    self.approx
  }

  pub(crate) fn cmp(&self, other: &Gain) -> Ordering {
    match (self.exact, other.exact) {
      (Some((n1, d1)), Some((n2, d2))) => mul_wide(n1, d2).cmp(&mul_wide(n2, d1)),
      _ => self.approx.total_cmp(&other.approx),
    }
  }
}

/// Full 256-bit product as `(high, low)`.
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
  const MASK: u128 = u64::MAX as u128;
  let (a1, a0) = (a >> 64, a & MASK);
  let (b1, b0) = (b >> 64, b & MASK);
  let p00 = a0 * b0;
  let p01 = a0 * b1;
  let p10 = a1 * b0;
  let p11 = a1 * b1;
  let mid = (p00 >> 64) + (p01 & MASK) + (p10 & MASK);
  let lo = (p00 & MASK) | (mid << 64);
  let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
  (hi, lo)
}

/// A chosen split together with its effect on the region's SSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
  pub axis: Axis,
  pub offset: usize,
  /// Total SSE of both children, summed over channels.
  pub sse_after: f64,
  /// Parent SSE minus `sse_after`.
  pub sse_gain: f64,
  pub(crate) gain: Gain,
}

impl Split {
  pub fn pos(&self) -> SplitPos {
    SplitPos::new(self.axis, self.offset)
  }
}

fn channel_sums(tables: &IntegralTables, r: Cuboid) -> Vec<u64> {
  (0..tables.channels()).map(|c| tables.rect_sum(c, r)).collect()
}

/// Gain of cutting `region` (with per-channel sums `parent`) at `pos`.
pub(crate) fn split_gain(
  tables: &IntegralTables,
  region: Cuboid,
  parent: &[u64],
  pos: SplitPos,
) -> Gain {
  let (first, second) = pos.apply(region);
  let a1 = first.area() as u128;
  let a2 = second.area() as u128;
  let den = a1 * a2 * region.area() as u128;
  let mut num = Some(0u128);
  let mut approx_num = 0f64;
  for (c, &total) in parent.iter().enumerate() {
    let s1 = tables.rect_sum(c, first) as i128;
    let s2 = total as i128 - s1;
    let d = s1.checked_mul(a2 as i128).zip(s2.checked_mul(a1 as i128)).map(|(p, q)| p - q);
    approx_num += (s1 as f64 * a2 as f64 - s2 as f64 * a1 as f64).powi(2);
    num = match (num, d) {
      (Some(acc), Some(d)) => {
        d.unsigned_abs().checked_mul(d.unsigned_abs()).and_then(|sq| acc.checked_add(sq))
      }
      _ => None,
    };
  }
  let approx = match num {
    Some(n) => n as f64 / den as f64,
    None => approx_num / den as f64,
  };
  Gain { exact: num.map(|n| (n, den)), approx }
}

/// Best of the `w + h - 2` candidate splits of `region`, or `None` for a
/// single pixel. Ties go to the earliest candidate (vertical before
/// horizontal, then smallest offset).
pub fn best_split(tables: &IntegralTables, region: Cuboid) -> Result<Option<Split>> {
  tables.check(region)?;
  Ok(best_split_unchecked(tables, region))
}

pub(crate) fn best_split_unchecked(tables: &IntegralTables, region: Cuboid) -> Option<Split> {
  let n = SplitPos::candidates(region.w, region.h);
  if n == 0 {
    return None;
  }
  let parent = channel_sums(tables, region);
  let eval = |i: usize| {
    let pos = SplitPos::from_index(i, region.w, region.h).expect("candidate in range");
    (i, split_gain(tables, region, &parent, pos))
  };
  // larger gain wins; equal gains go to the smaller index
  let better = |a: (usize, Gain), b: (usize, Gain)| match b.1.cmp(&a.1) {
    Ordering::Greater => b,
    Ordering::Less => a,
    Ordering::Equal if b.0 < a.0 => b,
    Ordering::Equal => a,
  };
  let (index, gain) = if n >= PARALLEL_CANDIDATES {
    (0..n).into_par_iter().map(eval).reduce_with(better).expect("non-empty")
  } else {
    (0..n).map(eval).reduce(better).expect("non-empty")
  };
  let pos = SplitPos::from_index(index, region.w, region.h).expect("candidate in range");
  let (first, second) = pos.apply(region);
  let sse_after = tables.region_sse_all_unchecked(first) + tables.region_sse_all_unchecked(second);
  Some(Split { axis: pos.axis, offset: pos.offset, sse_after, sse_gain: gain.value(), gain })
}

#[cfg(test)]
mod tests {
  use super::*;
  use crate::frame::Frame;
  use rand::{Rng, SeedableRng};
  use rand_chacha::ChaCha8Rng;

  #[test]
  fn perfect_vertical_separation() {
    let f = Frame::gray8(2, 2, &[0, 100, 0, 100]).unwrap();
    let t = IntegralTables::new(&f);
    let s = best_split(&t, Cuboid::full(2, 2)).unwrap().unwrap();
    assert_eq!((s.axis, s.offset), (Axis::Vertical, 1));
    assert_eq!(s.sse_after, 0.0);
    assert_eq!(s.sse_gain, 10000.0);
  }

  #[test]
  fn single_pixel_has_no_split() {
    let f = Frame::gray8(1, 1, &[3]).unwrap();
    let t = IntegralTables::new(&f);
    assert!(best_split(&t, Cuboid::full(1, 1)).unwrap().is_none());
  }

  #[test]
  fn constant_region_picks_first_candidate() {
    let f = Frame::gray8(3, 3, &[9; 9]).unwrap();
    let t = IntegralTables::new(&f);
    let s = best_split(&t, Cuboid::full(3, 3)).unwrap().unwrap();
    assert_eq!((s.axis, s.offset, s.sse_gain), (Axis::Vertical, 1, 0.0));
  }

  #[test]
  fn candidate_index_round_trip() {
    for w in 1..6 {
      for h in 1..6 {
        for i in 0..SplitPos::candidates(w, h) {
          let p = SplitPos::from_index(i, w, h).unwrap();
          assert!(p.is_valid_for(Cuboid::full(w, h)));
          assert_eq!(p.index(w), i);
        }
        assert!(SplitPos::from_index(SplitPos::candidates(w, h), w, h).is_none());
      }
    }
  }

  #[test]
  fn wide_multiply() {
    let a = u128::MAX;
    assert_eq!(mul_wide(a, a), (u128::MAX - 1, 1));
    assert_eq!(mul_wide(3, 5), (0, 15));
    assert_eq!(mul_wide(1 << 100, 1 << 100), (1 << 72, 0));
  }

  /// Exhaustive scan with exact rational SSE from naive loops.
  fn brute_force(f: &Frame, r: Cuboid) -> (Axis, usize) {
    let sse_num = |c: Cuboid| -> (i128, i128) {
      let (mut s, mut q) = (0i128, 0i128);
      for y in c.y..c.bottom() {
        for x in c.x..c.right() {
          let v = f.luma().get(x, y) as i128;
          s += v;
          q += v * v;
        }
      }
      let a = c.area() as i128;
      (a * q - s * s, a)
    };
    let mut best: Option<((i128, i128), SplitPos)> = None;
    let mut cands = vec![];
    for o in 1..r.w {
      cands.push(SplitPos::new(Axis::Vertical, o));
    }
    for o in 1..r.h {
      cands.push(SplitPos::new(Axis::Horizontal, o));
    }
    for p in cands {
      let (c1, c2) = p.apply(r);
      let (n1, d1) = sse_num(c1);
      let (n2, d2) = sse_num(c2);
      let after = (n1 * d2 + n2 * d1, d1 * d2);
      let smaller = match best {
        None => true,
        Some((b, _)) => after.0 * b.1 < b.0 * after.1,
      };
      if smaller {
        best = Some((after, p));
      }
    }
    let p = best.unwrap().1;
    (p.axis, p.offset)
  }

  #[test]
  fn random_regions_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(96);
    for _ in 0..200 {
      // few distinct levels so exact ties actually occur
      let levels = rng.gen_range(2..=4u8);
      let data: Vec<u8> = (0..9 * 6).map(|_| rng.gen_range(0..levels) * 60).collect();
      let f = Frame::gray8(9, 6, &data).unwrap();
      let t = IntegralTables::new(&f);
      let r = Cuboid::full(9, 6);
      let s = best_split(&t, r).unwrap().unwrap();
      assert_eq!((s.axis, s.offset), brute_force(&f, r));
      let parent = t.region_sse_all(r).unwrap();
      assert!((parent - s.sse_after - s.sse_gain).abs() < 1e-6);
    }
  }

  #[test]
  fn parallel_scan_matches_sequential_choice() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (w, h) = (3000, 1100);
    let data: Vec<u8> =
      (0..w * h).map(|i| if i % w < 1700 { rng.gen_range(0..4) } else { 200 }).collect();
    let f = Frame::gray8(w, h, &data).unwrap();
    let t = IntegralTables::new(&f);
    let s = best_split(&t, Cuboid::full(w, h)).unwrap().unwrap();
    assert_eq!((s.axis, s.offset), (Axis::Vertical, 1700));
  }
}
