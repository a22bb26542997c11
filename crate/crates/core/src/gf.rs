//! Arithmetic in binary extension fields GF(2^p), 1 <= p <= 8.
//!
//! A [`FieldSpec`] owns the reduction polynomial and, for p >= 4, a pair of
//! log/antilog tables. Hot loops in the coder and decoder work on raw `u8`
//! symbols through the `*_raw` methods; [`FieldElement`] is the checked,
//! field-tagged form used at API boundaries.

use std::fmt;

use thiserror::Error;

/// Largest supported exponent (q = 256).
pub const MAX_EXPONENT: u32 = 8;

/// Exponent from which multiplication goes through log/antilog tables.
const TABLE_THRESHOLD: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("field exponent {0} outside 1..=8")]
    InvalidExponent(u32),
    #[error("polynomial {poly:#x} does not have degree {degree}")]
    WrongDegree { poly: u32, degree: u32 },
    #[error("polynomial {0:#x} is reducible over GF(2)")]
    Reducible(u32),
    #[error("value {value} is not an element of GF({q})")]
    OutOfRange { value: u32, q: usize },
    #[error("operands belong to different fields ({left} vs {right})")]
    FieldMismatch { left: FieldTag, right: FieldTag },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

/// Identifies a field by exponent and reduction polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldTag {
    pub exponent: u8,
    pub poly: u16,
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}) mod {:#x}", self.exponent, self.poly)
    }
}

/// An element of a specific field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u8,
    tag: FieldTag,
}

impl FieldElement {
    pub fn value(self) -> u8 {
        self.value
    }

    pub fn tag(self) -> FieldTag {
        self.tag
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Degree of a GF(2) polynomial stored as a bit mask; `None` for zero.
fn poly_degree(poly: u32) -> Option<u32> {
    (poly != 0).then(|| 31 - poly.leading_zeros())
}

/// Remainder of `a` modulo `m` over GF(2).
fn poly_rem(mut a: u32, m: u32) -> u32 {
    let dm = poly_degree(m).expect("modulus must be nonzero");
    while let Some(da) = poly_degree(a) {
        if da < dm {
            break;
        }
        a ^= m << (da - dm);
    }
    a
}

/// Exhaustive trial division by every polynomial of degree 1..=deg/2.
pub fn is_irreducible(poly: u32) -> bool {
    let Some(deg) = poly_degree(poly) else {
        return false;
    };
    if deg == 0 {
        return false;
    }
    (2u32..(1 << (deg / 2 + 1))).all(|d| poly_rem(poly, d) != 0)
}

/// Lexicographically smallest irreducible polynomial of the given degree.
pub fn default_polynomial(exponent: u32) -> Result<u32, GfError> {
    if !(1..=MAX_EXPONENT).contains(&exponent) {
        return Err(GfError::InvalidExponent(exponent));
    }
    let lo = 1u32 << exponent;
    Ok((lo..lo << 1)
        .find(|&p| is_irreducible(p))
        .expect("irreducible polynomials exist in every degree"))
}

/// Shift-and-add product reduced modulo `poly`.
fn mul_reduce(mut a: u32, mut b: u32, exponent: u32, poly: u32) -> u32 {
    let top = 1u32 << exponent;
    let mut acc = 0;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= poly;
        }
    }
    acc
}

#[derive(Debug, Clone)]
struct LogTables {
    /// exp[i] = g^i, stored twice over so log sums need no reduction.
    exp: Vec<u8>,
    /// log[0] is unused.
    log: Vec<u16>,
}

/// A finite field GF(2^p). Immutable once built.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    exponent: u32,
    poly: u32,
    tables: Option<LogTables>,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.exponent == other.exponent && self.poly == other.poly
    }
}

impl Eq for FieldSpec {}

impl FieldSpec {
    /// Field of size 2^exponent with the default reduction polynomial.
    pub fn new(exponent: u32) -> Result<Self, GfError> {
        Self::with_polynomial(exponent, default_polynomial(exponent)?)
    }

    /// Field of size `q`, which must be a power of two in 2..=256.
    pub fn with_order(q: usize) -> Result<Self, GfError> {
        if !q.is_power_of_two() || !(2..=256).contains(&q) {
            return Err(GfError::InvalidExponent(q.trailing_zeros()));
        }
        Self::new(q.trailing_zeros())
    }

    pub fn with_polynomial(exponent: u32, poly: u32) -> Result<Self, GfError> {
        if !(1..=MAX_EXPONENT).contains(&exponent) {
            return Err(GfError::InvalidExponent(exponent));
        }
        if poly_degree(poly) != Some(exponent) {
            return Err(GfError::WrongDegree {
                poly,
                degree: exponent,
            });
        }
        if !is_irreducible(poly) {
            return Err(GfError::Reducible(poly));
        }
        let mut field = FieldSpec {
            exponent,
            poly,
            tables: None,
        };
        if exponent >= TABLE_THRESHOLD {
            field.tables = Some(field.build_tables());
        }
        Ok(field)
    }

    fn build_tables(&self) -> LogTables {
        let q = self.order();
        let group = (q - 1) as u32;
        // The reduction polynomial need not be primitive, so search for a
        // generator of the multiplicative group.
        let generator = (2..q as u32)
            .find(|&g| {
                let mut x = 1u32;
                for k in 1..=group {
                    x = mul_reduce(x, g, self.exponent, self.poly);
                    if x == 1 {
                        return k == group;
                    }
                }
                false
            })
            .unwrap_or(1);
        let mut exp = vec![0u8; 2 * (q - 1)];
        let mut log = vec![0u16; q];
        let mut x = 1u32;
        for i in 0..(q - 1) {
            exp[i] = x as u8;
            exp[i + q - 1] = x as u8;
            log[x as usize] = i as u16;
            x = mul_reduce(x, generator, self.exponent, self.poly);
        }
        LogTables { exp, log }
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// Field size q = 2^p.
    pub fn order(&self) -> usize {
        1 << self.exponent
    }

    pub fn polynomial(&self) -> u32 {
        self.poly
    }

    pub fn has_tables(&self) -> bool {
        self.tables.is_some()
    }

    pub fn tag(&self) -> FieldTag {
        FieldTag {
            exponent: self.exponent as u8,
            poly: self.poly as u16,
        }
    }

    pub fn element(&self, value: u32) -> Result<FieldElement, GfError> {
        if value as usize >= self.order() {
            return Err(GfError::OutOfRange {
                value,
                q: self.order(),
            });
        }
        Ok(FieldElement {
            value: value as u8,
            tag: self.tag(),
        })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            value: 0,
            tag: self.tag(),
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            value: 1,
            tag: self.tag(),
        }
    }

    fn check(&self, a: FieldElement) -> Result<(), GfError> {
        if a.tag != self.tag() {
            return Err(GfError::FieldMismatch {
                left: self.tag(),
                right: a.tag,
            });
        }
        Ok(())
    }

    fn wrap(&self, value: u8) -> FieldElement {
        FieldElement {
            value,
            tag: self.tag(),
        }
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, GfError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(a.value ^ b.value))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, GfError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(self.mul_raw(a.value, b.value)))
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, GfError> {
        self.check(a)?;
        self.inv_raw(a.value)
            .map(|v| self.wrap(v))
            .ok_or(GfError::ZeroInverse)
    }

    #[inline]
    pub fn add_raw(&self, a: u8, b: u8) -> u8 {
        a ^ b
    }

    #[inline]
    pub fn mul_raw(&self, a: u8, b: u8) -> u8 {
        debug_assert!((a as usize) < self.order() && (b as usize) < self.order());
        if a == 0 || b == 0 {
            return 0;
        }
        match &self.tables {
            Some(t) => t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize],
            None => mul_reduce(a as u32, b as u32, self.exponent, self.poly) as u8,
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv_raw(&self, a: u8) -> Option<u8> {
        if a == 0 {
            return None;
        }
        let q = self.order();
        match &self.tables {
            Some(t) => {
                let l = t.log[a as usize] as usize;
                Some(t.exp[(q - 1 - l) % (q - 1)])
            }
            None => (1..q as u8).find(|&b| self.mul_raw(a, b) == 1),
        }
    }

    pub fn div_raw(&self, a: u8, b: u8) -> Option<u8> {
        self.inv_raw(b).map(|ib| self.mul_raw(a, ib))
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.order())
    }
}
