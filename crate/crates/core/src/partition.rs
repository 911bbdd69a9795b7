//! Greedy cuboidal partitioning and coarse-frame generation.
//!
//! Starting from the whole frame, every leaf keeps its best split in a
//! max-heap keyed by SSE gain. Each step pops the leaf with the largest gain
//! (earliest-created leaf on ties), splits it and pushes the best splits of
//! its two children, so a split costs two candidate scans instead of a rescan
//! of every leaf.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use crate::cuboid::{check_tiling, Cuboid};
use crate::error::{Error, Result};
use crate::frame::{ChannelPolicy, Frame, Plane};
use crate::integral::IntegralTables;
use crate::split::{best_split_unchecked, Split};
use crate::tree::{SplitTree, TreeBuilder};

/// One greedy step: leaf `node` (creation order, root = 0) covering `region`
/// was cut by `split`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitStep {
  pub node: usize,
  pub region: Cuboid,
  pub split: Split,
}

#[derive(Debug, Clone)]
pub struct CuboidPartition {
  width: usize,
  height: usize,
  cuboids: Vec<Cuboid>,
  tree: SplitTree,
  steps: Vec<SplitStep>,
  total_sse: f64,
}

impl CuboidPartition {
  pub fn frame_dims(&self) -> (usize, usize) {
    (self.width, self.height)
  }

  /// Leaves in split-tree pre-order.
  pub fn cuboids(&self) -> &[Cuboid] {
    &self.cuboids
  }

  pub fn len(&self) -> usize {
    self.cuboids.len()
  }

  pub fn is_empty(&self) -> bool {
    self.cuboids.is_empty()
  }

  pub fn tree(&self) -> &SplitTree {
    &self.tree
  }

  /// Splits in the order they were made.
  pub fn steps(&self) -> &[SplitStep] {
    &self.steps
  }

  /// Sum of within-cuboid SSE over the channels used for partitioning.
  pub fn total_sse(&self) -> f64 {
    self.total_sse
  }

  /// Rebuilds a partition from a decoded tree, with SSE measured on `frame`.
  pub fn from_tree(frame: &Frame, tree: SplitTree, policy: ChannelPolicy) -> Result<Self> {
    if (tree.width(), tree.height()) != (frame.width(), frame.height()) {
      return Err(Error::ShapeMismatch(format!(
        "tree is {}x{}, frame is {}x{}",
        tree.width(),
        tree.height(),
        frame.width(),
        frame.height()
      )));
    }
    let tables = IntegralTables::with_policy(frame, policy);
    let cuboids = tree.leaves();
    let total_sse = internal_sse(&tables, &cuboids)?;
    Ok(Self {
      width: tree.width(),
      height: tree.height(),
      cuboids,
      tree,
      steps: Vec::new(),
      total_sse,
    })
  }
}

struct HeapEntry {
  node: usize,
  region: Cuboid,
  split: Split,
}

impl PartialEq for HeapEntry {
  fn eq(&self, other: &Self) -> bool {
    self.cmp(other) == Ordering::Equal
  }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
  fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
    Some(self.cmp(other))
  }
}

impl Ord for HeapEntry {
  fn cmp(&self, other: &Self) -> Ordering {
    self.split.gain.cmp(&other.split.gain).then_with(|| other.node.cmp(&self.node))
  }
}

/// Partitions `frame` into `n_cuboids` cuboids using every full-resolution
/// channel.
pub fn partition(frame: &Frame, n_cuboids: usize) -> Result<CuboidPartition> {
  partition_with(frame, n_cuboids, ChannelPolicy::AllChannels)
}

pub fn partition_with(
  frame: &Frame,
  n_cuboids: usize,
  policy: ChannelPolicy,
) -> Result<CuboidPartition> {
  let tables = IntegralTables::with_policy(frame, policy);
  partition_tables(&tables, n_cuboids)
}

/// Stops early only once every leaf is a single pixel.
pub fn partition_tables(tables: &IntegralTables, n_cuboids: usize) -> Result<CuboidPartition> {
  if n_cuboids == 0 {
    return Err(Error::ZeroCuboids);
  }
  let (width, height) = (tables.width(), tables.height());
  let mut builder = TreeBuilder::new(width, height);
  let mut heap = BinaryHeap::new();
  let mut steps = Vec::with_capacity(n_cuboids - 1);
  let root = Cuboid::full(width, height);
  if let Some(split) = best_split_unchecked(tables, root) {
    heap.push(HeapEntry { node: TreeBuilder::ROOT, region: root, split });
  }
  let mut leaves = 1;
  while leaves < n_cuboids {
    let Some(entry) = heap.pop() else { break };
    let (a, b) = builder.split(entry.node, entry.split.pos())?;
    steps.push(SplitStep { node: entry.node, region: entry.region, split: entry.split });
    leaves += 1;
    for id in [a, b] {
      let region = builder.region(id);
      if let Some(split) = best_split_unchecked(tables, region) {
        heap.push(HeapEntry { node: id, region, split });
      }
    }
  }
  let tree = builder.finish();
  let cuboids = tree.leaves();
  let total_sse = cuboids.iter().map(|&c| tables.region_sse_all_unchecked(c)).sum();
  Ok(CuboidPartition { width, height, cuboids, tree, steps, total_sse })
}

/// Total within-cuboid SSE of `cuboids` over every tabulated channel.
pub fn internal_sse(tables: &IntegralTables, cuboids: &[Cuboid]) -> Result<f64> {
  cuboids.iter().map(|&c| tables.region_sse_all(c)).sum()
}

/// Replaces every cuboid by its per-channel mean, rounded half away from
/// zero. Subsampled planes use the cuboids mapped onto their grid.
pub fn coarsen(frame: &Frame, partition: &CuboidPartition) -> Result<Frame> {
  coarsen_regions(frame, partition.cuboids())
}

pub fn coarsen_regions(frame: &Frame, regions: &[Cuboid]) -> Result<Frame> {
  check_tiling(regions, frame.width(), frame.height())?;
  let mut out = frame.clone();
  for c in 0..frame.channels() {
    let (sx, sy) = frame.channel_shifts(c);
    let src = &frame.planes()[c];
    let dst: &mut Plane = &mut out.planes_mut()[c];
    for r in regions {
      let r = r.subsampled(sx, sy);
      if r.is_empty() {
        continue;
      }
      let sum: u64 = (r.y..r.bottom())
        .map(|y| src.row(y)[r.x..r.right()].iter().map(|&s| s as u64).sum::<u64>())
        .sum();
      let area = r.area() as u64;
      let mean = ((2 * sum + area) / (2 * area)) as u16;
      for y in r.y..r.bottom() {
        let w = dst.width();
        dst.data_mut()[y * w + r.x..y * w + r.right()].fill(mean);
      }
    }
  }
  Ok(out)
}

/// `floor(width / block) * floor(height / block)`.
pub fn cuboid_count_from_blocks(width: usize, height: usize, block: usize) -> usize {
  assert!(block >= 1, "block size must be positive");
  (width / block) * (height / block)
}

/// Text dump: a `total_sse` line followed by `x y w h` per cuboid.
pub fn dump_partition(p: &CuboidPartition) -> String {
  let mut s = format!("total_sse {:.4}\n", p.total_sse);
  for c in &p.cuboids {
    let _ = writeln!(s, "{} {} {} {}", c.x, c.y, c.w, c.h);
  }
  s
}

pub fn parse_partition_dump(text: &str) -> Result<(f64, Vec<Cuboid>)> {
  let mut lines = text.lines().filter(|l| !l.trim().is_empty());
  let header = lines.next().ok_or_else(|| Error::Parse("empty partition dump".into()))?;
  let total_sse = header
    .strip_prefix("total_sse ")
    .and_then(|v| v.trim().parse().ok())
    .ok_or_else(|| Error::Parse(format!("bad header line `{header}`")))?;
  let cuboids = lines
    .map(|l| {
      let v: Vec<usize> = l
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad cuboid line `{l}`"))))
        .collect::<Result<_>>()?;
      match v[..] {
        [x, y, w, h] => Ok(Cuboid::new(x, y, w, h)),
        _ => Err(Error::Parse(format!("bad cuboid line `{l}`"))),
      }
    })
    .collect::<Result<_>>()?;
  Ok((total_sse, cuboids))
}

#[cfg(test)]
mod tests {
  use super::*;
  use crate::frame::{psnr, ChromaSubsampling, Psnr};
  use crate::split::Axis;

  fn quadrants() -> Frame {
    #[rustfmt::skip]
    let d = [
      10, 10, 50, 50,
      10, 10, 50, 50,
      90, 90, 200, 200,
      90, 90, 200, 200,
    ];
    Frame::gray8(4, 4, &d).unwrap()
  }

  #[test]
  fn single_cuboid_is_whole_frame() {
    let p = partition(&quadrants(), 1).unwrap();
    assert_eq!(p.cuboids(), &[Cuboid::full(4, 4)]);
    assert!(p.steps().is_empty());
    assert_eq!(p.tree().node_count(), 1);
  }

  #[test]
  fn zero_cuboids_rejected() {
    assert!(matches!(partition(&quadrants(), 0), Err(Error::ZeroCuboids)));
  }

  #[test]
  fn four_quadrants_recovered() {
    let p = partition(&quadrants(), 4).unwrap();
    let mut got = p.cuboids().to_vec();
    got.sort();
    let mut want = vec![
      Cuboid::new(0, 0, 2, 2),
      Cuboid::new(2, 0, 2, 2),
      Cuboid::new(0, 2, 2, 2),
      Cuboid::new(2, 2, 2, 2),
    ];
    want.sort();
    assert_eq!(got, want);
    assert_eq!(p.total_sse(), 0.0);
    // the horizontal cut separates the two bright bottom quadrants first
    assert_eq!(p.steps()[0].split.axis, Axis::Horizontal);
  }

  #[test]
  fn exhaustion_gives_single_pixels() {
    let f = quadrants();
    for n in [16, 40] {
      let p = partition(&f, n).unwrap();
      assert_eq!(p.len(), 16);
      assert!(p.cuboids().iter().all(|c| c.area() == 1));
      assert_eq!(p.tree().node_count(), 31);
    }
  }

  #[test]
  fn coarsen_constant_is_identity() {
    let f = Frame::gray8(3, 3, &[42; 9]).unwrap();
    let p = partition(&f, 3).unwrap();
    assert_eq!(coarsen(&f, &p).unwrap(), f);
  }

  #[test]
  fn coarsen_mean_of_pair() {
    let f = Frame::gray8(2, 1, &[10, 20]).unwrap();
    let p = partition(&f, 1).unwrap();
    assert_eq!(coarsen(&f, &p).unwrap().luma().data(), &[15, 15]);
    // half rounds away from zero
    let g = Frame::gray8(2, 1, &[10, 11]).unwrap();
    assert_eq!(coarsen(&g, &partition(&g, 1).unwrap()).unwrap().luma().data(), &[11, 11]);
  }

  #[test]
  fn coarsen_rejects_mismatched_partition() {
    let p = partition(&Frame::gray8(2, 2, &[0; 4]).unwrap(), 1).unwrap();
    assert!(coarsen(&Frame::gray8(3, 2, &[0; 6]).unwrap(), &p).is_err());
  }

  #[test]
  fn coarsen_420_fills_chroma() {
    let mut f = Frame::filled(4, 4, 3, 8, ChromaSubsampling::Cs420, 0).unwrap();
    f.planes_mut()[1].set(0, 0, 40);
    let p = partition(&f, 2).unwrap();
    let c = coarsen(&f, &p).unwrap();
    // flat luma: the first split is at column 1, whose cuboid maps onto
    // chroma column 0
    assert_eq!(c.planes()[1].data(), &[20, 0, 20, 0]);
    assert!(matches!(psnr(&f, &c, ChannelPolicy::LumaOnly).unwrap(), Psnr::Infinite));
  }

  #[test]
  fn cuboid_count_rule() {
    assert_eq!(cuboid_count_from_blocks(3840, 2160, 32), 8040);
    assert_eq!(cuboid_count_from_blocks(64, 64, 32), 4);
    assert_eq!(cuboid_count_from_blocks(65, 64, 32), 4);
  }

  #[test]
  fn dump_round_trip() {
    let p = partition(&quadrants(), 3).unwrap();
    let (sse, cuboids) = parse_partition_dump(&dump_partition(&p)).unwrap();
    assert_eq!(cuboids, p.cuboids());
    assert!((sse - p.total_sse()).abs() < 1e-4);
    assert!(parse_partition_dump("total_sse x\n").is_err());
    assert!(parse_partition_dump("total_sse 1\n1 2 3\n").is_err());
  }

  #[test]
  fn from_tree_reproduces_partition() {
    let f = quadrants();
    let p = partition(&f, 3).unwrap();
    let q = CuboidPartition::from_tree(&f, p.tree().clone(), ChannelPolicy::AllChannels).unwrap();
    assert_eq!(q.cuboids(), p.cuboids());
    assert_eq!(q.total_sse(), p.total_sse());
  }
}
