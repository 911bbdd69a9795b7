//! Cuboidal partitioning of video frames and its use for motion-compensated
//! prediction.
//!
//! A frame is split greedily into `n` axis-aligned cuboids that minimise the
//! within-cuboid SSE ([`partition`]), the split tree is serialized
//! bit-exactly ([`codec`]), and the anchor frame's cuboids drive full-search
//! motion estimation for the rest of a GOP ([`motion`], [`pipeline`]).
//! Fixed-block and coarse-frame baselines share the same machinery, and
//! [`bd`]/[`report`] turn rate-distortion points into Bjøntegaard deltas.

pub mod bd;
pub mod bitio;
pub mod codec;
pub mod cuboid;
pub mod error;
pub mod frame;
pub mod integral;
pub mod io;
pub mod motion;
pub mod partition;
pub mod pipeline;
pub mod report;
pub mod split;
pub mod synth;
pub mod tree;

pub use bd::{bd_delta, BdResult, RdPoint};
pub use bitio::Bitstream;
pub use codec::{decode_tree, encode_tree, tree_bit_cost};
pub use cuboid::Cuboid;
pub use error::{Error, Result};
pub use frame::{psnr, sse_region, ChannelPolicy, ChromaSubsampling, Frame, Plane, Psnr, Sequence};
pub use integral::IntegralTables;
pub use io::RawFormat;
pub use motion::{
  compensate, estimate_motion, fixed_block_grid, MotionField, MotionVector, SearchConfig,
};
pub use partition::{coarsen, cuboid_count_from_blocks, partition, CuboidPartition};
pub use pipeline::{run_gop, GopResult, PipelineConfig, Scheme};
pub use split::{best_split, Axis, Split, SplitPos};
pub use tree::SplitTree;
