//! Arithmetic over GF(2^p) with log/antilog tables.
//!
//! Tables are built once at construction and never mutated, so a
//! [`GfParams`] can be shared freely between threads.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported extension degree (q = 256).
pub const MAX_DEGREE: u32 = 8;

/// Default primitive polynomials, indexed by degree. Bit `i` is the
/// coefficient of `x^i`.
const DEFAULT_PRIMITIVE: [u32; 9] = [
    0,
    0b11,
    0b111,
    0b1011,
    0b10011,
    0b100101,
    0b1000011,
    0b10001001,
    0b100011101,
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("extension degree {0} outside 1..={MAX_DEGREE}")]
    Degree(u32),
    #[error("polynomial {poly:#b} does not have degree {degree}")]
    PolyDegree { poly: u32, degree: u32 },
    #[error("polynomial {0:#b} is reducible over GF(2)")]
    Reducible(u32),
    #[error("polynomial {0:#b} is irreducible but not primitive")]
    NotPrimitive(u32),
    #[error("zero has no multiplicative inverse")]
    NoInverse,
    #[error("value {value} is not an element of GF({q})")]
    OutOfField { value: u32, q: usize },
}

/// A field element. Validity against a particular field is checked where
/// sequences enter the crate (channel, encoders); arithmetic assumes it.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Symbol(pub u8);

impl Symbol {
    pub const ZERO: Symbol = Symbol(0);
    pub const ONE: Symbol = Symbol(1);

    #[inline]
    pub fn value(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u8> for Symbol {
    fn from(v: u8) -> Self {
        Symbol(v)
    }
}

/// The field GF(2^p) together with its multiplication tables.
#[derive(Clone, PartialEq, Eq)]
pub struct GfParams {
    p: u32,
    q: usize,
    prim_poly: u32,
    exp: Vec<u8>,
    log: Vec<u8>,
}

impl fmt::Debug for GfParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GfParams")
            .field("p", &self.p)
            .field("q", &self.q)
            .field("prim_poly", &format_args!("{:#b}", self.prim_poly))
            .finish()
    }
}

impl GfParams {
    /// GF(2^p) with the default primitive polynomial for that degree.
    pub fn new(p: u32) -> Result<Self, GfError> {
        if p == 0 || p > MAX_DEGREE {
            return Err(GfError::Degree(p));
        }
        Self::with_poly(p, DEFAULT_PRIMITIVE[p as usize])
    }

    /// Field of order `q` (must be a power of two up to 256).
    pub fn with_order(q: usize) -> Result<Self, GfError> {
        if !q.is_power_of_two() || q < 2 {
            return Err(GfError::Degree(0));
        }
        Self::new(q.trailing_zeros())
    }

    pub fn binary() -> Self {
        Self::new(1).expect("GF(2)")
    }

    /// GF(4) with x^2 + x + 1.
    pub fn quaternary() -> Self {
        Self::new(2).expect("GF(4)")
    }

    /// GF(2^p) over an explicit primitive polynomial.
    pub fn with_poly(p: u32, prim_poly: u32) -> Result<Self, GfError> {
        if p == 0 || p > MAX_DEGREE {
            return Err(GfError::Degree(p));
        }
        if poly_degree(prim_poly) != Some(p) {
            return Err(GfError::PolyDegree {
                poly: prim_poly,
                degree: p,
            });
        }
        if !is_irreducible(prim_poly) {
            return Err(GfError::Reducible(prim_poly));
        }
        let q = 1usize << p;
        let mut exp = vec![0u8; 2 * q];
        let mut log = vec![0u8; q];
        let mut x: u32 = 1;
        for i in 0..q - 1 {
            if i > 0 && x == 1 {
                return Err(GfError::NotPrimitive(prim_poly));
            }
            exp[i] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & (1 << p) != 0 {
                x ^= prim_poly;
            }
        }
        if x != 1 {
            return Err(GfError::NotPrimitive(prim_poly));
        }
        // Doubled antilog table avoids a modulo in `mul`.
        for i in q - 1..2 * q {
            exp[i] = exp[i - (q - 1)];
        }
        Ok(GfParams {
            p,
            q,
            prim_poly,
            exp,
            log,
        })
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.q
    }

    pub fn prim_poly(&self) -> u32 {
        self.prim_poly
    }

    /// Checked conversion from an integer.
    pub fn symbol(&self, value: u32) -> Result<Symbol, GfError> {
        if (value as usize) < self.q {
            Ok(Symbol(value as u8))
        } else {
            Err(GfError::OutOfField { value, q: self.q })
        }
    }

    #[inline]
    pub fn contains(&self, s: Symbol) -> bool {
        s.value() < self.q
    }

    pub fn elements(&self) -> impl Iterator<Item = Symbol> {
        (0..self.q).map(|v| Symbol(v as u8))
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        Symbol(a.0 ^ b.0)
    }

    /// Subtraction coincides with addition in characteristic 2.
    #[inline]
    pub fn sub(&self, a: Symbol, b: Symbol) -> Symbol {
        self.add(a, b)
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        if a.0 == 0 || b.0 == 0 {
            return Symbol::ZERO;
        }
        let l = self.log[a.value()] as usize + self.log[b.value()] as usize;
        Symbol(self.exp[l])
    }

    pub fn inv(&self, a: Symbol) -> Result<Symbol, GfError> {
        if a.0 == 0 {
            return Err(GfError::NoInverse);
        }
        let l = self.log[a.value()] as usize;
        Ok(Symbol(self.exp[(self.q - 1 - l) % (self.q - 1)]))
    }

    pub fn div(&self, a: Symbol, b: Symbol) -> Result<Symbol, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Number of binary digits needed per symbol (used for BER counting).
    #[inline]
    pub fn bits_per_symbol(&self) -> u32 {
        self.p
    }
}

/// Free functions mirroring the method API.
pub fn gf_add(a: Symbol, b: Symbol, f: &GfParams) -> Symbol {
    f.add(a, b)
}

pub fn gf_mul(a: Symbol, b: Symbol, f: &GfParams) -> Symbol {
    f.mul(a, b)
}

pub fn gf_inv(a: Symbol, f: &GfParams) -> Result<Symbol, GfError> {
    f.inv(a)
}

fn poly_degree(poly: u32) -> Option<u32> {
    if poly == 0 {
        None
    } else {
        Some(31 - poly.leading_zeros())
    }
}

/// Remainder of carry-less division.
fn poly_rem(mut a: u32, b: u32) -> u32 {
    let db = poly_degree(b).expect("nonzero divisor");
    while let Some(da) = poly_degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Exhaustive trial division by every polynomial of degree 1..=deg/2.
fn is_irreducible(poly: u32) -> bool {
    let Some(deg) = poly_degree(poly) else {
        return false;
    };
    if deg == 0 {
        return false;
    }
    for d in 1..=deg / 2 {
        for divisor in (1u32 << d)..(1u32 << (d + 1)) {
            if poly_rem(poly, divisor) == 0 {
                return false;
            }
        }
    }
    true
}
