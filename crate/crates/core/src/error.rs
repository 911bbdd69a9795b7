use std::io;

use thiserror::Error;

use crate::cuboid::Cuboid;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
  #[error("i/o error")]
  Io(#[from] io::Error),

  #[error("frame dimensions must be non-zero (got {width}x{height})")]
  ZeroDimensions { width: usize, height: usize },

  #[error("truncated frame at byte offset {offset}: expected {expected} bytes, found {found}")]
  TruncatedFrame { offset: u64, expected: usize, found: usize },

  #[error("invalid frame: {0}")]
  InvalidFrame(String),

  #[error("shape mismatch: {0}")]
  ShapeMismatch(String),

  #[error("region {region} out of bounds for {width}x{height} plane")]
  OutOfBounds { region: Cuboid, width: usize, height: usize },

  #[error("channel {channel} does not exist (frame has {channels})")]
  NoSuchChannel { channel: usize, channels: usize },

  #[error("cuboid count must be at least 1")]
  ZeroCuboids,

  #[error("regions do not tile the frame: {0}")]
  NotTiling(String),

  #[error("invalid split tree: {0}")]
  InvalidTree(String),

  #[error("bitstream exhausted at bit {position} of {length}")]
  StreamExhausted { position: usize, length: usize },

  #[error("split index {index} out of range for {width}x{height} node ({candidates} candidates)")]
  SplitIndexOutOfRange { index: u64, candidates: usize, width: usize, height: usize },

  #[error("bad bitstream container: {0}")]
  BadContainer(String),

  #[error("invalid configuration: {0}")]
  Config(String),

  #[error("bd-rate needs at least 4 points per curve, got {0}")]
  TooFewPoints(usize),

  #[error("rd curve is not strictly increasing in rate and quality: {0}")]
  NonMonotone(String),

  #[error("rd curves do not overlap")]
  EmptyOverlap,

  #[error("parse error: {0}")]
  Parse(String),
}
