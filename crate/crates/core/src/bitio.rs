//! MSB-first bit packing.

use crate::error::{Error, Result};

/// Bits packed MSB-first into bytes. Pad bits of the last byte are zero and
/// not counted in [`Bitstream::len`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bitstream {
  bytes: Vec<u8>,
  bits: usize,
}

impl Bitstream {
  pub fn new() -> Self {
    Self::default()
  }

  /// Wraps `bytes`, keeping the first `bits` bits. Fails when `bytes` is too
  /// short or has non-zero padding.
  pub fn from_bytes(bytes: Vec<u8>, bits: usize) -> Result<Self> {
    if bytes.len() != bits.div_ceil(8) {
      return Err(Error::BadContainer(format!(
        "{} bits need {} bytes, got {}",
        bits,
        bits.div_ceil(8),
        bytes.len()
      )));
    }
    if bits % 8 != 0 {
      let pad = 8 - bits % 8;
      if bytes[bytes.len() - 1] & ((1u8 << pad) - 1) != 0 {
        return Err(Error::BadContainer("non-zero padding bits".into()));
      }
    }
    Ok(Self { bytes, bits })
  }

  pub fn len(&self) -> usize {
    self.bits
  }

  pub fn is_empty(&self) -> bool {
    self.bits == 0
  }

  pub fn as_bytes(&self) -> &[u8] {
    &self.bytes
  }

  pub fn push_bit(&mut self, bit: bool) {
    if self.bits % 8 == 0 {
      self.bytes.push(0);
    }
    if bit {
      let last = self.bytes.len() - 1;
      self.bytes[last] |= 0x80 >> (self.bits % 8);
    }
    self.bits += 1;
  }

  /// Appends the low `width` bits of `value`, most significant first.
  pub fn push_bits(&mut self, value: u64, width: u32) {
    debug_assert!(width == 64 || value >> width == 0);
    for i in (0..width).rev() {
      self.push_bit((value >> i) & 1 == 1);
    }
  }

  pub fn reader(&self) -> BitReader<'_> {
    BitReader { stream: self, pos: 0 }
  }
}

pub struct BitReader<'a> {
  stream: &'a Bitstream,
  pos: usize,
}

impl BitReader<'_> {
  pub fn position(&self) -> usize {
    self.pos
  }

  pub fn remaining(&self) -> usize {
    self.stream.bits - self.pos
  }

  pub fn read_bit(&mut self) -> Result<bool> {
    if self.pos >= self.stream.bits {
      return Err(Error::StreamExhausted { position: self.pos, length: self.stream.bits });
    }
    let bit = self.stream.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
    self.pos += 1;
    Ok(bit)
  }

  pub fn read_bits(&mut self, width: u32) -> Result<u64> {
    if self.remaining() < width as usize {
      return Err(Error::StreamExhausted { position: self.stream.bits, length: self.stream.bits });
    }
    let mut v = 0u64;
    for _ in 0..width {
      v = (v << 1) | self.read_bit()? as u64;
    }
    Ok(v)
  }
}
