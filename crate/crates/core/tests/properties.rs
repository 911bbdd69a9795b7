use cuboid_core::bd::bd_delta;
use cuboid_core::codec::{analytic_bit_cost, decode_tree, encode_tree, tree_bit_cost};
use cuboid_core::cuboid::check_tiling;
use cuboid_core::frame::ChromaSubsampling;
use cuboid_core::io::{decode_raw_video, encode_raw_video};
use cuboid_core::pipeline::{run_gop, PartitionSource, PipelineConfig, Scheme};
use cuboid_core::synth::MovingRectangle;
use cuboid_core::tree::TreeBuilder;
use cuboid_core::{
  partition, psnr, sse_region, Axis, ChannelPolicy, Cuboid, Frame, Plane, RawFormat, RdPoint,
  SearchConfig, SplitPos,
};
use proptest::prelude::*;

fn gray(w: usize, h: usize, data: &[u8]) -> Frame {
  Frame::gray8(w, h, data).unwrap()
}

fn frame_strategy(max: usize) -> impl Strategy<Value = Frame> {
  (1..=max, 1..=max).prop_flat_map(|(w, h)| {
    prop::collection::vec(any::<u8>(), w * h).prop_map(move |d| gray(w, h, &d))
  })
}

/// Builds a tree from a list of `(leaf pick, axis pick, offset pick)`
/// choices, skipping choices that land on single-pixel leaves.
fn build_tree(w: usize, h: usize, choices: &[(usize, bool, usize)]) -> cuboid_core::SplitTree {
  let mut b = TreeBuilder::new(w, h);
  let mut open = vec![TreeBuilder::ROOT];
  for &(leaf, vertical, offset) in choices {
    open.retain(|&id| b.region(id).area() > 1);
    if open.is_empty() {
      break;
    }
    let id = open.swap_remove(leaf % open.len());
    let r = b.region(id);
    let axis = match (r.w > 1, r.h > 1) {
      (true, true) if vertical => Axis::Vertical,
      (true, false) => Axis::Vertical,
      _ => Axis::Horizontal,
    };
    let extent = if axis == Axis::Vertical { r.w } else { r.h };
    let (a, c) = b.split(id, SplitPos::new(axis, 1 + offset % (extent - 1))).unwrap();
    open.extend([a, c]);
  }
  b.finish()
}

fn curve_strategy() -> impl Strategy<Value = Vec<RdPoint>> {
  (100.0..1000.0f64, 25.0..35.0f64, prop::collection::vec((1.3..2.5f64, 0.5..3.0f64), 4..7))
    .prop_map(|(r0, q0, steps)| {
      let (mut r, mut q) = (r0, q0);
      steps
        .into_iter()
        .map(|(dr, dq)| {
          r *= dr;
          q += dq;
          RdPoint::new(r, q)
        })
        .collect()
    })
}

proptest! {
  #![proptest_config(ProptestConfig::with_cases(1000))]

  #[test]
  fn tree_round_trip(
    w in 1usize..300,
    h in 1usize..300,
    choices in prop::collection::vec((any::<usize>(), any::<bool>(), any::<usize>()), 0..40),
  ) {
    let tree = build_tree(w, h, &choices);
    let bits = encode_tree(&tree);
    prop_assert_eq!(bits.len() as u64, tree_bit_cost(&tree));
    prop_assert_eq!(bits.len() as u64, analytic_bit_cost(&tree));
    prop_assert_eq!(tree.node_count(), 2 * tree.leaf_count() - 1);
    prop_assert_eq!(decode_tree(&bits, w, h).unwrap(), tree);
  }
}

proptest! {
  #![proptest_config(ProptestConfig::with_cases(200))]

  #[test]
  fn partition_tiles_and_sse_adds_up(frame in frame_strategy(24), n in 1usize..40) {
    let p = partition(&frame, n).unwrap();
    let (w, h) = (frame.width(), frame.height());
    prop_assert_eq!(p.len(), n.min(w * h));
    check_tiling(p.cuboids(), w, h).unwrap();

    let coarse = cuboid_core::coarsen(&frame, &p).unwrap();
    let whole = sse_region(&frame, &coarse, Cuboid::full(w, h), 0).unwrap();
    let parts: u64 = p.cuboids().iter().map(|&c| sse_region(&frame, &coarse, c, 0).unwrap()).sum();
    prop_assert_eq!(whole, parts);
  }

  #[test]
  fn more_cuboids_never_raise_sse(frame in frame_strategy(20), n in 1usize..30) {
    let a = partition(&frame, n).unwrap();
    let b = partition(&frame, n + 1).unwrap();
    prop_assert!(b.total_sse() <= a.total_sse() + 1e-6 * a.total_sse().max(1.0));
    prop_assert_eq!(&b.steps()[..a.steps().len()], a.steps());
  }

  #[test]
  fn psnr_is_symmetric(a in frame_strategy(16), seed in any::<u64>()) {
    let data: Vec<u8> = a
      .luma()
      .data()
      .iter()
      .enumerate()
      .map(|(i, &s)| (s as u64 ^ seed.rotate_left(i as u32 % 64)) as u8)
      .collect();
    let b = gray(a.width(), a.height(), &data);
    let ab = psnr(&a, &b, ChannelPolicy::LumaOnly).unwrap();
    let ba = psnr(&b, &a, ChannelPolicy::LumaOnly).unwrap();
    prop_assert_eq!(ab, ba);
  }

  #[test]
  fn bd_is_antisymmetric(a in curve_strategy(), b in curve_strategy()) {
    if let (Ok(ab), Ok(ba)) = (bd_delta(&a, &b), bd_delta(&b, &a)) {
      prop_assert!((ab.delta_psnr + ba.delta_psnr).abs() <= 0.01);
      let product = (1.0 + ab.delta_rate / 100.0) * (1.0 + ba.delta_rate / 100.0);
      prop_assert!((product - 1.0).abs() <= 0.005, "product {}", product);
    }
  }

  #[test]
  fn raw_420_round_trip(w in 1usize..20, h in 1usize..20, frames in 1usize..4, seed in any::<u8>()) {
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    let bytes: Vec<u8> = (0..frames * (w * h + 2 * cw * ch))
      .map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed))
      .collect();
    let seq = decode_raw_video(&bytes, w, h, RawFormat::Yuv420p8, None).unwrap();
    prop_assert_eq!(seq.len(), frames);
    prop_assert_eq!(seq.frames()[0].planes()[1].width(), cw);
    prop_assert_eq!(encode_raw_video(seq.frames(), RawFormat::Yuv420p8).unwrap(), bytes);
  }
}

#[test]
fn chained_prediction_drifts_downward() {
  let seq = MovingRectangle::default().generate();
  let cfg = PipelineConfig {
    gop_size: seq.len(),
    block_size: 16,
    search: SearchConfig { range: 16, ..Default::default() },
    ..Default::default()
  };
  let r = run_gop(&seq, &cfg).unwrap();
  let psnrs: Vec<f64> = r.scored().map(|f| f.psnr.db()).collect();
  for w in psnrs.windows(2) {
    assert!(w[1] <= w[0], "{psnrs:?}");
  }
}

#[test]
fn per_frame_partitions_cost_more_side_info() {
  let seq = MovingRectangle::default().generate();
  let run = |source| {
    let cfg = PipelineConfig {
      gop_size: seq.len(),
      block_size: 16,
      partition_source: source,
      scheme: Scheme::Cuboid,
      ..Default::default()
    };
    run_gop(&seq, &cfg).unwrap()
  };
  let (a, p) = (run(PartitionSource::AnchorOnly), run(PartitionSource::PerFrame));
  assert!(p.side_info_bits() > a.side_info_bits());
  assert!(p.tree_bits() > a.tree_bits());
  assert_eq!(p.motion_bits(), a.motion_bits());
}

#[test]
fn subsampled_frame_partitions_on_luma_planes() {
  let (w, h) = (9, 7);
  let luma: Vec<u16> = (0..w * h).map(|i| (i * 37 % 251) as u16).collect();
  let chroma = |v| Plane::filled(5, 4, v);
  let f = Frame::new(
    w,
    h,
    8,
    ChromaSubsampling::Cs420,
    vec![Plane::new(w, h, luma.clone()).unwrap(), chroma(10), chroma(200)],
  )
  .unwrap();
  let g =
    Frame::new(w, h, 8, ChromaSubsampling::Cs444, vec![Plane::new(w, h, luma).unwrap()]).unwrap();
  assert_eq!(partition(&f, 6).unwrap().cuboids(), partition(&g, 6).unwrap().cuboids());
}
