//! Arithmetic in GF(2^n) for the `a²` term of the hybrid approximate channel.
//!
//! Field elements are `n`-bit integers (polynomial coefficients, high bit =
//! highest degree). The modulus is the lexicographically smallest irreducible
//! polynomial of degree `n`.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 8;

/// Index `n` holds the modulus for GF(2^n), leading term included.
const MODULI: [u32; MAX_DEGREE + 1] = [
    0,
    0b10,        // x
    0b111,       // x^2 + x + 1
    0b1011,      // x^3 + x + 1
    0b10011,     // x^4 + x + 1
    0b100101,    // x^5 + x^2 + 1
    0b1000011,   // x^6 + x + 1
    0b10000011,  // x^7 + x + 1
    0b100011011, // x^8 + x^4 + x^3 + x + 1
];

pub fn modulus(n: usize) -> Result<u32> {
    if n == 0 || n > MAX_DEGREE {
        return Err(Error::Capacity {
            what: "GF(2^n) degree",
            requested: n,
            limit: MAX_DEGREE,
        });
    }
    Ok(MODULI[n])
}

pub fn mul(a: u64, b: u64, n: usize) -> Result<u64> {
    let m = modulus(n)? as u64;
    let top = 1u64 << n;
    let (mut a, mut b, mut acc) = (a, b, 0u64);
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= m;
        }
    }
    Ok(acc)
}

pub fn square(a: u64, n: usize) -> Result<u64> {
    mul(a, a, n)
}

/// Polynomial remainder over GF(2).
fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = 31 - b.leading_zeros();
    while a != 0 && 31 - a.leading_zeros() >= db {
        let shift = (31 - a.leading_zeros()) - db;
        a ^= b << shift;
    }
    a
}

/// Trial division by every polynomial of degree 1..=deg/2.
pub fn is_irreducible(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let deg = 31 - p.leading_zeros();
    (2u32..(1u32 << (deg / 2 + 1))).all(|q| poly_rem(p, q) != 0)
}
