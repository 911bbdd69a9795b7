//! Deterministic synthetic sequences for tests, benchmarks and demos.

use crate::frame::Frame;

fn splitmix(mut z: u64) -> u64 {
  z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
  z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
  z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
  z ^ (z >> 31)
}

/// Hash noise in `[-amplitude, amplitude]`.
pub fn texture(x: usize, y: usize, seed: u64, amplitude: u8) -> i32 {
  if amplitude == 0 {
    return 0;
  }
  let h = splitmix(seed ^ splitmix(((x as u64) << 32) | y as u64));
  (h % (2 * amplitude as u64 + 1)) as i32 - amplitude as i32
}

/// A textured rectangle translating at constant velocity over a static
/// textured background. The background is a low-frequency wave pattern plus
/// fine grain; the rectangle carries its own grain, which moves with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MovingRectangle {
  pub width: usize,
  pub height: usize,
  pub frames: usize,
  pub rect_w: usize,
  pub rect_h: usize,
  pub start: (usize, usize),
  pub velocity: (usize, usize),
  pub background_level: u8,
  /// Peak amplitude of each of the two background wave components.
  pub background_wave: u8,
  pub background_grain: u8,
  pub rect_level: u8,
  pub rect_texture: u8,
  pub seed: u64,
}

impl Default for MovingRectangle {
  /// 128x128, 10 frames, 20x28 rectangle moving (+2, +1) per frame. The
  /// rectangle edges stay off the 16-pixel grid in every frame.
  fn default() -> Self {
    Self {
      width: 128,
      height: 128,
      frames: 10,
      rect_w: 20,
      rect_h: 28,
      start: (37, 21),
      velocity: (2, 1),
      background_level: 70,
      background_wave: 20,
      background_grain: 4,
      rect_level: 180,
      rect_texture: 20,
      seed: 0x5eed,
    }
  }
}

impl MovingRectangle {
  /// 64x64 variant for fast unit tests.
  pub fn small() -> Self {
    Self {
      width: 64,
      height: 64,
      frames: 3,
      rect_w: 12,
      rect_h: 10,
      start: (21, 19),
      ..Self::default()
    }
  }

  pub fn rect_origin(&self, frame: usize) -> (usize, usize) {
    (self.start.0 + self.velocity.0 * frame, self.start.1 + self.velocity.1 * frame)
  }

  fn wave(&self, x: usize, y: usize) -> i32 {
    let a = self.background_wave as f64;
    (a * (x as f64 * 0.19).sin() + a * (y as f64 * 0.13).cos()) as i32
  }

  pub fn frame(&self, k: usize) -> Frame {
    let (rx, ry) = self.rect_origin(k);
    let mut data = Vec::with_capacity(self.width * self.height);
    for y in 0..self.height {
      for x in 0..self.width {
        let inside = x >= rx && x < rx + self.rect_w && y >= ry && y < ry + self.rect_h;
        let v = if inside {
          self.rect_level as i32 + texture(x - rx, y - ry, !self.seed, self.rect_texture)
        } else {
          self.background_level as i32
            + self.wave(x, y)
            + texture(x, y, self.seed, self.background_grain)
        };
        data.push(v.clamp(0, 255) as u8);
      }
    }
    Frame::gray8(self.width, self.height, &data).expect("valid synthetic frame")
  }

  pub fn generate(&self) -> Vec<Frame> {
    (0..self.frames).map(|k| self.frame(k)).collect()
  }
}

#[cfg(test)]
mod tests {
  use super::*;

  #[test]
  fn rectangle_edges_stay_off_grid() {
    let m = MovingRectangle::default();
    for k in 0..m.frames {
      let (x, y) = m.rect_origin(k);
      for e in [x, x + m.rect_w, y, y + m.rect_h] {
        assert_ne!(e % 16, 0, "frame {k}");
      }
      assert!(x + m.rect_w <= m.width && y + m.rect_h <= m.height);
    }
  }

  #[test]
  fn rectangle_content_translates() {
    let m = MovingRectangle::default();
    let (a, b) = (m.frame(0), m.frame(1));
    let (x, y) = m.rect_origin(0);
    for j in 0..m.rect_h {
      for i in 0..m.rect_w {
        assert_eq!(a.luma().get(x + i, y + j), b.luma().get(x + i + 2, y + j + 1));
      }
    }
  }
}
