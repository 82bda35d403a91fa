//! Payload bit bookkeeping.

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// A sequence of payload bits, each stored as 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitBuffer {
    bits: Vec<u8>,
}

impl BitBuffer {
    pub fn new() -> Self {
        Self { bits: Vec::new() }
    }

    /// Wraps an existing bit vector. Every element must be 0 or 1.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Parameter {
                name: "bits",
                reason: format!("value {b} is not a bit"),
            });
        }
        Ok(Self { bits })
    }

    /// Draws `n` uniformly random bits from `stream`.
    pub fn random(n: usize, stream: &mut RandomStream) -> Self {
        let mut bits = vec![0u8; n];
        stream.fill_bits(&mut bits);
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn push_index(&mut self, value: usize, width: usize) {
        push_index_bits(&mut self.bits, value, width);
    }

    /// Number of positions at which `self` and `other` differ. Both buffers
    /// must have the same length.
    pub fn hamming_distance(&self, other: &BitBuffer) -> Result<u64> {
        if self.len() != other.len() {
            return Err(Error::BitLength {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count() as u64)
    }
}

impl From<BitBuffer> for Vec<u8> {
    fn from(buf: BitBuffer) -> Vec<u8> {
        buf.bits
    }
}

/// Interprets `bits` (MSB first) as an unsigned integer.
pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Appends `value` as `width` bits, MSB first.
pub fn push_index_bits(out: &mut Vec<u8>, value: usize, width: usize) {
    debug_assert!(width == 0 || value < (1usize << width));
    for pos in (0..width).rev() {
        out.push(((value >> pos) & 1) as u8);
    }
}
