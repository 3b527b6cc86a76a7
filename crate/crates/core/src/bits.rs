//! Fixed-length bit strings.
//!
//! Bit `j` counts from the left, so the integer value of a string is also the
//! computational-basis index of the matching register with qubit 0 as the most
//! significant bit: `BitString::parse("01")` is `|01⟩`, index 1.

use std::fmt;

use crate::error::{Error, Result};

pub const MAX_BITS: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: u8,
    value: u64,
}

fn mask(len: usize) -> u64 {
    if len == 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl BitString {
    /// Panics if `len > 64` or `value` does not fit in `len` bits.
    pub fn new(len: usize, value: u64) -> Self {
        assert!(len <= MAX_BITS, "bit string longer than {MAX_BITS}");
        assert!(
            value & !mask(len) == 0,
            "value {value} does not fit in {len} bits"
        );
        Self {
            len: len as u8,
            value,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(len, 0)
    }

    pub fn ones(len: usize) -> Self {
        Self::new(len, mask(len))
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let value = bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Self::new(bits.len(), value)
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(s: &str) -> Result<Self> {
        if s.len() > MAX_BITS {
            return Err(Error::InvalidParameter(format!("bit string too long: {s}")));
        }
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(&bits))
    }

    pub fn random<R: rand::Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self::new(len, rng.random::<u64>() & mask(len))
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn index(&self) -> usize {
        self.value as usize
    }

    pub fn bit(&self, j: usize) -> bool {
        assert!(
            j < self.len(),
            "bit {j} out of range for length {}",
            self.len
        );
        (self.value >> (self.len() - 1 - j)) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |j| self.bit(j))
    }

    pub fn count_ones(&self) -> u32 {
        self.value.count_ones()
    }

    pub fn is_odd_parity(&self) -> bool {
        self.count_ones() % 2 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// Parity of the bitwise inner product.
    pub fn dot(&self, other: &BitString) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot product");
        (self.value & other.value).count_ones() % 2 == 1
    }

    pub fn xor(&self, other: &BitString) -> BitString {
        assert_eq!(self.len, other.len, "length mismatch in xor");
        Self::new(self.len(), self.value ^ other.value)
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let len = self.len() + other.len();
        assert!(len <= MAX_BITS, "concatenation longer than {MAX_BITS}");
        let shifted = if other.len() == 64 {
            0
        } else {
            self.value << other.len()
        };
        Self::new(len, shifted | other.value)
    }

    /// Splits into the first `at` bits and the rest.
    pub fn split_at(&self, at: usize) -> (BitString, BitString) {
        assert!(at <= self.len(), "split point past end");
        let tail_len = self.len() - at;
        let head = if tail_len == 64 {
            0
        } else {
            self.value >> tail_len
        };
        (
            Self::new(at, head),
            Self::new(tail_len, self.value & mask(tail_len)),
        )
    }

    /// Bits at the given positions, in the given order.
    pub fn select(&self, positions: &[usize]) -> BitString {
        let bits: Vec<bool> = positions.iter().map(|&p| self.bit(p)).collect();
        Self::from_bits(&bits)
    }

    /// Lowercase hex, zero-padded to `ceil(len / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.len().div_ceil(4).max(1);
        format!("{:0digits$x}", self.value)
    }

    pub fn from_hex(len: usize, hex: &str) -> Result<Self> {
        let value = u64::from_str_radix(hex, 16)
            .map_err(|e| Error::InvalidParameter(format!("bad hex {hex:?}: {e}")))?;
        if len > MAX_BITS || value & !mask(len) != 0 {
            return Err(Error::InvalidParameter(format!(
                "hex {hex:?} does not fit in {len} bits"
            )));
        }
        Ok(Self::new(len, value))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

/// Smallest `b` with `2^b >= count`; zero for `count <= 1`.
pub fn bits_for(count: usize) -> usize {
    if count <= 1 {
        0
    } else {
        (usize::BITS - (count - 1).leading_zeros()) as usize
    }
}
