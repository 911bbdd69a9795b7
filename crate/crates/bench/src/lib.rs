//! Fixtures shared by the kernel benchmarks.

use cuboid_core::synth::MovingRectangle;
use cuboid_core::Frame;

/// Frame sizes the benchmarks sweep over.
pub const SIZES: [(usize, usize); 3] = [(128, 128), (480, 272), (1280, 720)];

/// Two consecutive frames of a moving-rectangle scene at the given size.
pub fn frame_pair(width: usize, height: usize) -> (Frame, Frame) {
  let scene = MovingRectangle {
    width,
    height,
    frames: 2,
    rect_w: width / 5,
    rect_h: height / 4,
    start: (width / 3, height / 5),
    ..Default::default()
  };
  (scene.frame(0), scene.frame(1))
}

/// Cuboid count matching a `block`-sized grid.
pub fn block_count(width: usize, height: usize, block: usize) -> usize {
  cuboid_core::cuboid_count_from_blocks(width, height, block)
}
