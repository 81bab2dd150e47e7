//! Bit-string helpers and left-to-right randomness streams.
//!
//! Bit strings are plain `[bool]` slices. Packing into integers is
//! little-endian: bit `k` of a string is bit `k` of the integer.

use alloc::vec::Vec;
use rand::RngCore;

/// `width` low bits of `value`, least significant first.
pub fn bits_from_u64(value: u64, width: usize) -> Vec<bool> {
    (0..width)
        .map(|k| k < 64 && (value >> k) & 1 == 1)
        .collect()
}

/// Inverse of [`bits_from_u64`]. Panics if more than 64 bits are set-able.
pub fn bits_to_u64(bits: &[bool]) -> u64 {
    assert!(bits.len() <= 64, "bit string longer than 64");
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (k, &b)| acc | ((b as u64) << k))
}

/// Packs bits into bytes, least significant bit first within each byte.
pub fn bits_to_bytes(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k))
        })
        .collect()
}

/// Unpacks bytes into `8 * bytes.len()` bits, least significant bit first.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).map(move |k| (b >> k) & 1 == 1))
        .collect()
}

/// Parses a string of `0`/`1` characters. Returns `None` on any other char.
pub fn parse_bitstring(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

pub fn format_bitstring(bits: &[bool]) -> alloc::string::String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Reading past the end of a finite stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("randomness stream exhausted after {consumed} bits")]
pub struct StreamExhausted {
    pub consumed: usize,
}

/// A one-way random tape: bits are read left to right, never revisited.
pub trait BitStream {
    fn next_bit(&mut self) -> Result<bool, StreamExhausted>;

    /// Number of bits read so far.
    fn consumed(&self) -> usize;

    fn take_bits(&mut self, count: usize) -> Result<Vec<bool>, StreamExhausted> {
        (0..count).map(|_| self.next_bit()).collect()
    }

    /// `count` bits read as a little-endian integer (`count <= 64`).
    fn take_u64(&mut self, count: usize) -> Result<u64, StreamExhausted> {
        debug_assert!(count <= 64);
        let mut v = 0u64;
        for k in 0..count {
            if self.next_bit()? {
                v |= 1 << k;
            }
        }
        Ok(v)
    }
}

impl<S: BitStream + ?Sized> BitStream for &mut S {
    fn next_bit(&mut self) -> Result<bool, StreamExhausted> {
        (**self).next_bit()
    }
    fn consumed(&self) -> usize {
        (**self).consumed()
    }
}

/// Unbounded stream backed by an RNG, buffered 64 bits at a time.
#[derive(Debug, Clone)]
pub struct RngBitStream<R> {
    rng: R,
    buf: u64,
    left: u32,
    consumed: usize,
}

impl<R: RngCore> RngBitStream<R> {
    pub fn new(rng: R) -> Self {
        RngBitStream {
            rng,
            buf: 0,
            left: 0,
            consumed: 0,
        }
    }
}

impl<R: RngCore> BitStream for RngBitStream<R> {
    fn next_bit(&mut self) -> Result<bool, StreamExhausted> {
        if self.left == 0 {
            self.buf = self.rng.next_u64();
            self.left = 64;
        }
        let b = self.buf & 1 == 1;
        self.buf >>= 1;
        self.left -= 1;
        self.consumed += 1;
        Ok(b)
    }
    fn consumed(&self) -> usize {
        self.consumed
    }
}

/// Finite stream over a caller-supplied bit string.
#[derive(Debug, Clone)]
pub struct SliceBitStream<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> SliceBitStream<'a> {
    pub fn new(bits: &'a [bool]) -> Self {
        SliceBitStream { bits, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

impl BitStream for SliceBitStream<'_> {
    fn next_bit(&mut self) -> Result<bool, StreamExhausted> {
        let b = *self
            .bits
            .get(self.pos)
            .ok_or(StreamExhausted { consumed: self.pos })?;
        self.pos += 1;
        Ok(b)
    }
    fn consumed(&self) -> usize {
        self.pos
    }
}

/// Per-trial stream: ChaCha8 keyed by `master_seed`, stream id = `trial`.
///
/// Trials are independent and can run in any order or in parallel.
pub fn trial_stream(master_seed: u64, trial: u64) -> RngBitStream<rand_chacha::ChaCha8Rng> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    RngBitStream::new(rng)
}

/// `ceil(log2(x))` for `x >= 1`; 0 for `x <= 1`.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}
