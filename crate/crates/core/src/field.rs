//! Prime-field arithmetic.
//!
//! [`PrimeField`] is the arithmetic context used by every container in the
//! crate: matrices and shares store bare `u32` residues and route all
//! arithmetic through their field. [`FieldElement`] is the self-describing
//! value type for callers that want modulus checking on every operation.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Modulus used when 4n fits under it, so raw bytes embed one per symbol.
pub const DEFAULT_MODULUS: u32 = 257;

/// The prime field F_q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u32,
}

impl PrimeField {
    pub fn new(q: u32) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::InvalidModulus(q));
        }
        Ok(Self { q })
    }

    /// Field for a code over `n` nodes: q = 257 while 4n ≤ 257, otherwise
    /// the smallest prime ≥ 4n.
    pub fn for_nodes(n: usize) -> Self {
        let need = (4 * n as u64).max(DEFAULT_MODULUS as u64);
        let q = next_prime(need).expect("node count too large for a 32-bit field");
        Self { q }
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.q
    }

    #[inline]
    pub fn reduce(&self, v: u64) -> u32 {
        (v % self.q as u64) as u32
    }

    pub fn element(&self, v: u64) -> FieldElement {
        FieldElement {
            value: self.reduce(v),
            q: self.q,
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        if s >= self.q as u64 {
            (s - self.q as u64) as u32
        } else {
            s as u32
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            (a as u64 + self.q as u64 - b as u64) as u32
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: u32) -> Result<u32> {
        let a = a % self.q;
        if a == 0 {
            return Err(Error::DivisionByZero);
        }
        let (mut r0, mut r1) = (self.q as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(t0.rem_euclid(self.q as i64) as u32)
    }

    /// `a^e` by square-and-multiply, with 0^0 = 1.
    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a % self.q;
        let mut acc = 1 % self.q;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Inner product of two residue slices.
    #[inline]
    pub fn dot(&self, a: &[u32], b: &[u32]) -> u32 {
        debug_assert_eq!(a.len(), b.len());
        let q = self.q as u64;
        let mut acc: u64 = 0;
        for (&x, &y) in a.iter().zip(b) {
            acc = (acc + x as u64 * y as u64) % q;
        }
        acc as u32
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

/// Which ring operation [`FieldElement::arith`] applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

/// A residue in [0, q) tagged with its modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    q: u32,
}

impl FieldElement {
    pub fn new(value: u64, field: PrimeField) -> Self {
        field.element(value)
    }

    #[inline]
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { q: self.q }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn arith(self, other: Self, op: ArithOp) -> Result<Self> {
        if self.q != other.q {
            return Err(Error::FieldMismatch {
                left: self.q,
                right: other.q,
            });
        }
        let f = self.field();
        let value = match op {
            ArithOp::Add => f.add(self.value, other.value),
            ArithOp::Sub => f.sub(self.value, other.value),
            ArithOp::Mul => f.mul(self.value, other.value),
        };
        Ok(Self { value, q: self.q })
    }

    pub fn try_add(self, other: Self) -> Result<Self> {
        self.arith(other, ArithOp::Add)
    }

    pub fn try_sub(self, other: Self) -> Result<Self> {
        self.arith(other, ArithOp::Sub)
    }

    pub fn try_mul(self, other: Self) -> Result<Self> {
        self.arith(other, ArithOp::Mul)
    }

    pub fn inv(self) -> Result<Self> {
        let value = self.field().inv(self.value)?;
        Ok(Self { value, q: self.q })
    }

    pub fn pow(self, e: u64) -> Self {
        Self {
            value: self.field().pow(self.value, e),
            q: self.q,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

// Operator forms panic on mismatched moduli; use the `try_*` methods to get
// an error instead.
macro_rules! impl_op {
    ($trait:ident, $method:ident, $op:expr) => {
        impl $trait for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: Self) -> Self {
                self.arith(rhs, $op)
                    .expect("field elements from different fields")
            }
        }
    };
}

impl_op!(Add, add, ArithOp::Add);
impl_op!(Sub, sub, ArithOp::Sub);
impl_op!(Mul, mul, ArithOp::Mul);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> Self {
        Self {
            value: self.field().neg(self.value),
            q: self.q,
        }
    }
}

pub fn is_prime(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    if q.is_multiple_of(2) {
        return q == 2;
    }
    let q = q as u64;
    let mut p = 3u64;
    while p * p <= q {
        if q.is_multiple_of(p) {
            return false;
        }
        p += 2;
    }
    true
}

/// Smallest prime ≥ `from` that fits in 32 bits.
pub fn next_prime(from: u64) -> Option<u32> {
    (from.max(2)..=u32::MAX as u64)
        .map(|c| c as u32)
        .find(|&c| is_prime(c))
}
