//! Arithmetic over GF(2^8) with the reduction polynomial x^8 + x^4 + x^3 + x + 1 (0x11B).
//!
//! Multiplication and inversion go through exp/log tables generated at compile
//! time from the generator 0x03. [`mul_schoolbook`] is the carry-less reference
//! used to build and check the tables.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign};

use thiserror::Error;

/// Low byte of the reduction polynomial; the x^8 term is implicit.
const POLY_LOW: u8 = 0x1B;

const GENERATOR: u8 = 0x03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("division by zero in GF(256)")]
    DivisionByZero,
}

/// An element of GF(2^8).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Gf256(pub u8);

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256({:#04x})", self.0)
    }
}

/// Carry-less multiply followed by reduction modulo 0x11B, one bit at a time.
pub const fn mul_schoolbook(a: u8, b: u8) -> u8 {
    let mut acc = 0u8;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        let carry = a & 0x80;
        a <<= 1;
        if carry != 0 {
            a ^= POLY_LOW;
        }
        b >>= 1;
    }
    acc
}

const fn build_exp() -> [u8; 512] {
    let mut table = [0u8; 512];
    let mut x = 1u8;
    let mut i = 0;
    while i < 255 {
        table[i] = x;
        table[i + 255] = x;
        x = mul_schoolbook(x, GENERATOR);
        i += 1;
    }
    // Doubled so `log a + log b` (at most 508) indexes without a modulo.
    table
}

const fn build_log(exp: &[u8; 512]) -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < 255 {
        table[exp[i] as usize] = i as u8;
        i += 1;
    }
    table
}

static EXP: [u8; 512] = build_exp();
static LOG: [u8; 256] = build_log(&EXP);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    #[inline]
    pub const fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse. Zero has none.
    pub fn inv(self) -> Result<Gf256, GfError> {
        if self.0 == 0 {
            return Err(GfError::DivisionByZero);
        }
        let log = LOG[self.0 as usize] as usize;
        Ok(Gf256(EXP[255 - log]))
    }

    pub fn checked_div(self, rhs: Gf256) -> Result<Gf256, GfError> {
        Ok(self * rhs.inv()?)
    }

    pub fn pow(self, mut exp: u32) -> Gf256 {
        let mut base = self;
        let mut acc = Gf256::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl From<Gf256> for u8 {
    fn from(v: Gf256) -> Self {
        v.0
    }
}

impl Add for Gf256 {
    type Output = Gf256;

    #[allow(clippy::suspicious_arithmetic_impl)]
    #[inline]
    fn add(self, rhs: Gf256) -> Gf256 {
        Gf256(self.0 ^ rhs.0)
    }
}

impl AddAssign for Gf256 {
    #[inline]
    fn add_assign(&mut self, rhs: Gf256) {
        *self = *self + rhs;
    }
}

impl Mul for Gf256 {
    type Output = Gf256;

    #[inline]
    fn mul(self, rhs: Gf256) -> Gf256 {
        if self.0 == 0 || rhs.0 == 0 {
            return Gf256::ZERO;
        }
        let idx = LOG[self.0 as usize] as usize + LOG[rhs.0 as usize] as usize;
        Gf256(EXP[idx])
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = *self * rhs;
    }
}

/// Field addition (XOR).
#[inline]
pub fn gf_add(a: Gf256, b: Gf256) -> Gf256 {
    a + b
}

#[inline]
pub fn gf_mul(a: Gf256, b: Gf256) -> Gf256 {
    a * b
}

pub fn gf_inv(a: Gf256) -> Result<Gf256, GfError> {
    a.inv()
}

/// `dst[i] ^= coef * src[i]` over bytes.
pub fn mul_add_slice(dst: &mut [u8], src: &[u8], coef: Gf256) {
    debug_assert_eq!(dst.len(), src.len());
    match coef.0 {
        0 => {}
        1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
        _ => {
            let log_c = LOG[coef.0 as usize] as usize;
            for (d, &s) in dst.iter_mut().zip(src) {
                if s != 0 {
                    *d ^= EXP[LOG[s as usize] as usize + log_c];
                }
            }
        }
    }
}
