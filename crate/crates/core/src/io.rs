//! Raw planar video and binary PGM/PPM ingestion.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{plane_dims, ChromaSubsampling, Frame, Plane, Sample, Sequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawFormat {
  Yuv420p8,
  Yuv444p8,
  Gray8,
}

impl RawFormat {
  pub fn channels(self) -> usize {
    match self {
      RawFormat::Gray8 => 1,
      RawFormat::Yuv420p8 | RawFormat::Yuv444p8 => 3,
    }
  }

  pub fn subsampling(self) -> ChromaSubsampling {
    match self {
      RawFormat::Yuv420p8 => ChromaSubsampling::Cs420,
      RawFormat::Yuv444p8 | RawFormat::Gray8 => ChromaSubsampling::Cs444,
    }
  }

  /// Bytes of one frame.
  pub fn frame_size(self, width: usize, height: usize) -> usize {
    (0..self.channels())
      .map(|c| {
        let (w, h) = plane_dims(width, height, self.subsampling(), c);
        w * h
      })
      .sum()
  }
}

impl FromStr for RawFormat {
  type Err = Error;

  fn from_str(s: &str) -> Result<Self> {
    match s {
      "yuv420p8" | "yuv420p" => Ok(RawFormat::Yuv420p8),
      "yuv444p8" | "yuv444p" => Ok(RawFormat::Yuv444p8),
      "gray8" | "gray" => Ok(RawFormat::Gray8),
      _ => Err(Error::Parse(format!("unknown raw format `{s}`"))),
    }
  }
}

pub fn load_raw_video(
  path: impl AsRef<Path>,
  width: usize,
  height: usize,
  format: RawFormat,
  max_frames: Option<usize>,
) -> Result<Sequence> {
  let bytes = fs::read(path)?;
  decode_raw_video(&bytes, width, height, format, max_frames)
}

/// Splits a planar, row-major byte buffer into frames.
pub fn decode_raw_video(
  bytes: &[u8],
  width: usize,
  height: usize,
  format: RawFormat,
  max_frames: Option<usize>,
) -> Result<Sequence> {
  if width == 0 || height == 0 {
    return Err(Error::ZeroDimensions { width, height });
  }
  let frame_size = format.frame_size(width, height);
  let whole = bytes.len() / frame_size;
  let rest = bytes.len() % frame_size;
  if rest != 0 {
    return Err(Error::TruncatedFrame {
      offset: (whole * frame_size) as u64,
      expected: frame_size,
      found: rest,
    });
  }
  let count = max_frames.map_or(whole, |m| m.min(whole));
  let frames = bytes
    .chunks_exact(frame_size)
    .take(count)
    .map(|chunk| {
      let mut planes = Vec::with_capacity(format.channels());
      let mut pos = 0;
      for c in 0..format.channels() {
        let (w, h) = plane_dims(width, height, format.subsampling(), c);
        let data = chunk[pos..pos + w * h].iter().map(|&b| b as Sample).collect();
        pos += w * h;
        planes.push(Plane::new(w, h, data)?);
      }
      Frame::new(width, height, 8, format.subsampling(), planes)
    })
    .collect::<Result<Vec<_>>>()?;
  Sequence::new(frames, 0.0)
}

/// Serializes frames back to raw planar bytes.
pub fn encode_raw_video(frames: &[Frame], format: RawFormat) -> Result<Vec<u8>> {
  let mut out = Vec::new();
  for f in frames {
    if f.bit_depth() != 8 || f.channels() != format.channels() {
      return Err(Error::InvalidFrame(format!(
        "{}-channel {}-bit frame cannot be written as {format:?}",
        f.channels(),
        f.bit_depth()
      )));
    }
    if format.channels() > 1 && f.subsampling() != format.subsampling() {
      return Err(Error::InvalidFrame(format!(
        "{:?} frame cannot be written as {format:?}",
        f.subsampling()
      )));
    }
    for p in f.planes() {
      out.extend(p.data().iter().map(|&s| s as u8));
    }
  }
  Ok(out)
}

pub fn save_raw_video(path: impl AsRef<Path>, frames: &[Frame], format: RawFormat) -> Result<()> {
  fs::write(path, encode_raw_video(frames, format)?)?;
  Ok(())
}

fn pnm_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
  loop {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
      *pos += 1;
    }
    if *pos < bytes.len() && bytes[*pos] == b'#' {
      while *pos < bytes.len() && bytes[*pos] != b'\n' {
        *pos += 1;
      }
      continue;
    }
    break;
  }
  let start = *pos;
  while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
    *pos += 1;
  }
  if start == *pos {
    return Err(Error::Parse("unexpected end of PNM header".into()));
  }
  Ok(&bytes[start..*pos])
}

fn pnm_number(bytes: &[u8], pos: &mut usize) -> Result<usize> {
  let tok = pnm_token(bytes, pos)?;
  std::str::from_utf8(tok)
    .ok()
    .and_then(|s| s.parse().ok())
    .ok_or_else(|| Error::Parse(format!("bad PNM header field {:?}", String::from_utf8_lossy(tok))))
}

/// Decodes a binary PGM (P5, one channel) or PPM (P6, three 4:4:4 channels)
/// with a maximum value of 255.
pub fn decode_pnm(bytes: &[u8]) -> Result<Frame> {
  let mut pos = 0;
  let channels = match pnm_token(bytes, &mut pos)? {
    b"P5" => 1,
    b"P6" => 3,
    m => {
      return Err(Error::Parse(format!("unsupported PNM magic {:?}", String::from_utf8_lossy(m))))
    }
  };
  let width = pnm_number(bytes, &mut pos)?;
  let height = pnm_number(bytes, &mut pos)?;
  let maxval = pnm_number(bytes, &mut pos)?;
  if maxval != 255 {
    return Err(Error::Parse(format!("only 8-bit PNM is supported (maxval {maxval})")));
  }
  if width == 0 || height == 0 {
    return Err(Error::ZeroDimensions { width, height });
  }
  // single whitespace byte separates header and raster
  pos += 1;
  let need = width * height * channels;
  let raster = bytes.get(pos..pos + need).ok_or(Error::TruncatedFrame {
    offset: pos as u64,
    expected: need,
    found: bytes.len().saturating_sub(pos),
  })?;
  let planes = (0..channels)
    .map(|c| {
      let data = raster.iter().skip(c).step_by(channels).map(|&b| b as Sample).collect();
      Plane::new(width, height, data)
    })
    .collect::<Result<Vec<_>>>()?;
  Frame::new(width, height, 8, ChromaSubsampling::Cs444, planes)
}

pub fn encode_pnm(frame: &Frame) -> Result<Vec<u8>> {
  let magic = match (frame.channels(), frame.subsampling()) {
    (1, _) => "P5",
    (3, ChromaSubsampling::Cs444) => "P6",
    _ => return Err(Error::InvalidFrame("PNM needs 1 or 3 full-resolution channels".into())),
  };
  if frame.bit_depth() != 8 {
    return Err(Error::InvalidFrame("PNM output is 8-bit only".into()));
  }
  let mut out = format!("{magic}\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
  let n = frame.width() * frame.height();
  for i in 0..n {
    for p in frame.planes() {
      out.push(p.data()[i] as u8);
    }
  }
  Ok(out)
}

pub fn load_pnm(path: impl AsRef<Path>) -> Result<Frame> {
  decode_pnm(&fs::read(path)?)
}

pub fn save_pnm(path: impl AsRef<Path>, frame: &Frame) -> Result<()> {
  fs::write(path, encode_pnm(frame)?)?;
  Ok(())
}
