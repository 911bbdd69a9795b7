//! Split-tree serialization.
//!
//! Pre-order, one type bit per node (1 = split, 0 = leaf). A split node of a
//! `W x H` region is followed by its candidate index (see
//! [`SplitPos::index`]) as a fixed-width integer of `ceil(log2(W + H - 2))`
//! bits. Region sizes are re-derived while decoding and never transmitted.

use crate::bitio::Bitstream;
use crate::cuboid::Cuboid;
use crate::error::{Error, Result};
use crate::split::SplitPos;
use crate::tree::{Node, SplitTree};

pub const TREE_MAGIC: &[u8; 8] = b"CPSTREE1";

/// `ceil(log2(n))` for `n >= 1`.
pub fn ceil_log2(n: u64) -> u32 {
  debug_assert!(n >= 1);
  if n <= 1 {
    0
  } else {
    64 - (n - 1).leading_zeros()
  }
}

/// Index width for a split node of a `w` x `h` region.
pub fn index_bits(w: usize, h: usize) -> u32 {
  ceil_log2(SplitPos::candidates(w, h) as u64)
}

pub fn encode_tree(tree: &SplitTree) -> Bitstream {
  let mut out = Bitstream::new();
  for (region, node) in tree.walk() {
    match node {
      Node::Leaf => out.push_bit(false),
      Node::Split(pos) => {
        out.push_bit(true);
        out.push_bits(pos.index(region.w) as u64, index_bits(region.w, region.h));
      }
    }
  }
  out
}

pub fn decode_tree(bits: &Bitstream, width: usize, height: usize) -> Result<SplitTree> {
  if width == 0 || height == 0 {
    return Err(Error::ZeroDimensions { width, height });
  }
  let mut reader = bits.reader();
  let mut nodes = Vec::new();
  let mut stack = vec![Cuboid::full(width, height)];
  while let Some(region) = stack.pop() {
    if !reader.read_bit()? {
      nodes.push(Node::Leaf);
      continue;
    }
    let candidates = SplitPos::candidates(region.w, region.h);
    if candidates == 0 {
      return Err(Error::InvalidTree(format!(
        "split flag on single-pixel node at bit {}",
        reader.position() - 1
      )));
    }
    let index = reader.read_bits(index_bits(region.w, region.h))?;
    let pos = SplitPos::from_index(index as usize, region.w, region.h).ok_or(
      Error::SplitIndexOutOfRange { index, candidates, width: region.w, height: region.h },
    )?;
    nodes.push(Node::Split(pos));
    let (first, second) = pos.apply(region);
    stack.push(second);
    stack.push(first);
  }
  if reader.remaining() != 0 {
    return Err(Error::InvalidTree(format!("{} unused trailing bits", reader.remaining())));
  }
  SplitTree::from_preorder(width, height, nodes)
}

/// Exact encoded length of `tree` in bits.
pub fn tree_bit_cost(tree: &SplitTree) -> u64 {
  tree
    .walk()
    .map(|(r, n)| match n {
      Node::Leaf => 1,
      Node::Split(_) => 1 + index_bits(r.w, r.h) as u64,
    })
    .sum()
}

/// `(2n - 1) + sum over split nodes of ceil(log2(W_i + H_i - 2))`, computed
/// from the node counts and region sizes rather than by encoding.
pub fn analytic_bit_cost(tree: &SplitTree) -> u64 {
  let n = tree.leaf_count() as u64;
  let index: u64 = tree
    .walk()
    .filter(|(_, node)| matches!(node, Node::Split(_)))
    .map(|(r, _)| index_bits(r.w, r.h) as u64)
    .sum();
  (2 * n - 1) + index
}

/// Upper bound for any `n`-leaf tree on a `width` x `height` frame:
/// `(2n - 1) + (n - 1) * ceil(log2(width + height - 2))`.
pub fn bit_cost_bound(n: usize, width: usize, height: usize) -> u64 {
  let n = n as u64;
  (2 * n - 1) + (n - 1) * index_bits(width, height) as u64
}

/// File container: magic, then big-endian u32 width, height and bit count,
/// then the payload bytes.
pub fn write_tree_file(tree: &SplitTree) -> Result<Vec<u8>> {
  let bits = encode_tree(tree);
  let field = |v: usize, name: &str| {
    u32::try_from(v).map_err(|_| Error::BadContainer(format!("{name} {v} exceeds u32")))
  };
  let mut out = Vec::with_capacity(20 + bits.as_bytes().len());
  out.extend_from_slice(TREE_MAGIC);
  out.extend_from_slice(&field(tree.width(), "width")?.to_be_bytes());
  out.extend_from_slice(&field(tree.height(), "height")?.to_be_bytes());
  out.extend_from_slice(&field(bits.len(), "bit count")?.to_be_bytes());
  out.extend_from_slice(bits.as_bytes());
  Ok(out)
}

pub fn read_tree_file(bytes: &[u8]) -> Result<SplitTree> {
  if bytes.len() < 20 || &bytes[..8] != TREE_MAGIC {
    return Err(Error::BadContainer("missing CPSTREE1 header".into()));
  }
  let u32_at = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
  let (width, height, bits) = (u32_at(8), u32_at(12), u32_at(16));
  let stream = Bitstream::from_bytes(bytes[20..].to_vec(), bits)?;
  decode_tree(&stream, width, height)
}

#[cfg(test)]
mod tests {
  use super::*;
  use crate::split::Axis;
  use crate::tree::TreeBuilder;

  #[test]
  fn ceil_log2_values() {
    assert_eq!(ceil_log2(1), 0);
    assert_eq!(ceil_log2(2), 1);
    assert_eq!(ceil_log2(3), 2);
    assert_eq!(ceil_log2(126), 7);
    assert_eq!(ceil_log2(128), 7);
    assert_eq!(ceil_log2(5998), 13);
    assert_eq!(ceil_log2(33), 6);
  }

  #[test]
  fn single_leaf_is_one_bit() {
    let t = SplitTree::leaf(7, 3);
    let b = encode_tree(&t);
    assert_eq!(b.len(), 1);
    assert_eq!(b.as_bytes(), &[0]);
    assert_eq!(tree_bit_cost(&t), 1);
    assert_eq!(decode_tree(&b, 7, 3).unwrap(), t);
  }

  #[test]
  fn two_by_two_vertical_is_four_bits() {
    let mut b = TreeBuilder::new(2, 2);
    b.split(TreeBuilder::ROOT, SplitPos::new(Axis::Vertical, 1)).unwrap();
    let t = b.finish();
    let bits = encode_tree(&t);
    // 1 | index 0 in 1 bit | 0 | 0
    assert_eq!(bits.len(), 4);
    assert_eq!(bits.as_bytes(), &[0b1000_0000]);
    assert_eq!(decode_tree(&bits, 2, 2).unwrap(), t);
  }

  #[test]
  fn sixty_four_one_split_is_ten_bits() {
    let mut b = TreeBuilder::new(64, 64);
    b.split(TreeBuilder::ROOT, SplitPos::new(Axis::Horizontal, 20)).unwrap();
    let t = b.finish();
    assert_eq!(encode_tree(&t).len(), 10);
    assert_eq!(tree_bit_cost(&t), 10);
    assert_eq!(analytic_bit_cost(&t), 10);
  }

  #[test]
  fn degenerate_two_pixel_node_has_no_index_bits() {
    let mut b = TreeBuilder::new(1, 2);
    b.split(TreeBuilder::ROOT, SplitPos::new(Axis::Horizontal, 1)).unwrap();
    let t = b.finish();
    assert_eq!(encode_tree(&t).len(), 3);
    assert_eq!(decode_tree(&encode_tree(&t), 1, 2).unwrap(), t);
  }

  #[test]
  fn bound_for_sixteen_cuboids_at_4k() {
    assert_eq!(bit_cost_bound(16, 3840, 2160), 226);
    assert_eq!(bit_cost_bound(1, 3840, 2160), 1);
  }

  #[test]
  fn truncated_stream_is_an_error() {
    let mut b = TreeBuilder::new(64, 64);
    b.split(TreeBuilder::ROOT, SplitPos::new(Axis::Horizontal, 20)).unwrap();
    let full = encode_tree(&b.finish());
    let mut cut = Bitstream::new();
    let mut r = full.reader();
    for _ in 0..full.len() - 1 {
      cut.push_bit(r.read_bit().unwrap());
    }
    assert!(matches!(decode_tree(&cut, 64, 64), Err(Error::StreamExhausted { .. })));
    assert!(decode_tree(&Bitstream::new(), 4, 4).is_err());
  }

  #[test]
  fn out_of_range_index_is_an_error() {
    // 3x2 region: 3 candidates in 2 bits; index 3 is invalid
    let mut s = Bitstream::new();
    s.push_bit(true);
    s.push_bits(3, 2);
    s.push_bit(false);
    s.push_bit(false);
    assert!(matches!(decode_tree(&s, 3, 2), Err(Error::SplitIndexOutOfRange { index: 3, .. })));
  }

  #[test]
  fn split_flag_on_single_pixel_is_an_error() {
    let mut s = Bitstream::new();
    s.push_bit(true);
    assert!(decode_tree(&s, 1, 1).is_err());
  }

  #[test]
  fn file_container_round_trip() {
    let mut b = TreeBuilder::new(5, 9);
    let (l, _) = b.split(TreeBuilder::ROOT, SplitPos::new(Axis::Horizontal, 4)).unwrap();
    b.split(l, SplitPos::new(Axis::Vertical, 2)).unwrap();
    let t = b.finish();
    let bytes = write_tree_file(&t).unwrap();
    assert_eq!(&bytes[..8], b"CPSTREE1");
    assert_eq!(&bytes[8..12], &5u32.to_be_bytes());
    assert_eq!(&bytes[12..16], &9u32.to_be_bytes());
    assert_eq!(&bytes[16..20], &(tree_bit_cost(&t) as u32).to_be_bytes());
    assert_eq!(read_tree_file(&bytes).unwrap(), t);
    assert!(read_tree_file(b"CPSTREE0\0\0\0\x01\0\0\0\x01\0\0\0\x01\0").is_err());
  }
}
