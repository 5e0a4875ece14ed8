//! Arithmetic over GF(2), GF(2^4) and GF(2^8).
//!
//! Multiplication and inversion go through log/antilog tables built once at
//! [`FieldSpec`] construction; addition is carry-less XOR. Table construction
//! searches for a primitive element instead of assuming `x` generates the
//! multiplicative group (it does not for the GF(2^8) polynomial used here).

use crate::{Error, Result};

/// Default reduction polynomial for GF(2^4): x^4 + x + 1.
pub const POLY_GF16: u32 = 0x13;
/// Default reduction polynomial for GF(2^8): x^8 + x^4 + x^3 + x + 1.
pub const POLY_GF256: u32 = 0x11B;

/// A single field element, stored as its integer representation in `[0, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElement(pub u8);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// One of the supported field orders with its reduction polynomial and
/// multiplication tables.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    q: u16,
    poly: u32,
    generator: u8,
    exp: Vec<u8>, // exp[i] = g^i, doubled so exp[log a + log b] needs no modulo
    log: Vec<u16>,
}

/// Schoolbook polynomial multiplication reduced by `poly`; used to build the
/// tables and as an independent route in tests.
pub fn peasant_mul(mut a: u32, mut b: u32, q: u32, poly: u32) -> u32 {
    let mut r = 0;
    while b != 0 {
        if b & 1 != 0 {
            r ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & q != 0 {
            a ^= poly;
        }
    }
    r
}

fn is_irreducible(poly: u32, degree: u32) -> bool {
    // x^(2^degree) = x mod poly and gcd-style distinct-degree checks are
    // overkill at degree <= 8: exhaust products of lower-degree polynomials.
    for a in 2..(1u32 << degree) {
        for b in a..(1u32 << degree) {
            // carry-less multiply a*b without reduction
            let mut prod = 0u32;
            let (mut x, mut y) = (a, b);
            while y != 0 {
                if y & 1 != 0 {
                    prod ^= x;
                }
                x <<= 1;
                y >>= 1;
            }
            if prod == poly {
                return false;
            }
        }
    }
    true
}

impl FieldSpec {
    /// Build the field of order `q` (2, 16 or 256) with the conventional
    /// reduction polynomial.
    pub fn new(q: u16) -> Result<FieldSpec> {
        match q {
            2 => FieldSpec::with_polynomial(2, 0x3),
            16 => FieldSpec::with_polynomial(16, POLY_GF16),
            256 => FieldSpec::with_polynomial(256, POLY_GF256),
            other => Err(Error::BadFieldOrder(other)),
        }
    }

    /// Build a field with an explicit reduction polynomial (bitmask, degree
    /// log2(q)). The polynomial is checked for irreducibility.
    pub fn with_polynomial(q: u16, poly: u32) -> Result<FieldSpec> {
        if !matches!(q, 2 | 16 | 256) {
            return Err(Error::BadFieldOrder(q));
        }
        let degree = (q as u32).trailing_zeros();
        if poly >> degree != 1 || !is_irreducible(poly, degree) {
            return Err(Error::ReduciblePolynomial { poly });
        }
        if q == 2 {
            return Ok(FieldSpec {
                q,
                poly,
                generator: 1,
                exp: vec![1, 1],
                log: vec![0, 0],
            });
        }
        let qq = q as u32;
        // smallest primitive element
        let mut generator = 0u8;
        'search: for g in 2..qq {
            let mut x = 1u32;
            for step in 1..=qq - 1 {
                x = peasant_mul(x, g, qq, poly);
                if x == 1 {
                    if step == qq - 1 {
                        generator = g as u8;
                        break 'search;
                    }
                    continue 'search;
                }
            }
        }
        debug_assert_ne!(generator, 0, "every GF(2^k) has a primitive element");
        let mut exp = vec![0u8; 2 * q as usize];
        let mut log = vec![0u16; q as usize];
        let mut x = 1u32;
        for i in 0..(q - 1) as usize {
            exp[i] = x as u8;
            log[x as usize] = i as u16;
            x = peasant_mul(x, generator as u32, qq, poly);
        }
        for i in (q - 1) as usize..2 * q as usize {
            exp[i] = exp[i - (q - 1) as usize];
        }
        Ok(FieldSpec { q, poly, generator, exp, log })
    }

    #[inline]
    pub fn q(&self) -> u16 {
        self.q
    }

    pub fn reduction_polynomial(&self) -> u32 {
        self.poly
    }

    pub fn generator(&self) -> u8 {
        self.generator
    }

    /// Carry-less addition; its own inverse.
    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 ^ b.0)
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.q == 2 {
            return FieldElement(a.0 & b.0);
        }
        if a.is_zero() || b.is_zero() {
            return FieldElement::ZERO;
        }
        FieldElement(self.exp[self.log[a.0 as usize] as usize + self.log[b.0 as usize] as usize])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        if self.q == 2 {
            return Ok(FieldElement::ONE);
        }
        let l = self.log[a.0 as usize] as usize;
        Ok(FieldElement(self.exp[(self.q - 1) as usize - l]))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// All nonzero elements, in integer order.
    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (1..self.q as u32).map(|v| FieldElement(v as u8))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn characteristic_two_addition() {
        let f = FieldSpec::new(2).unwrap();
        assert_eq!(f.add(FieldElement(1), FieldElement(1)), FieldElement(0));
        let f = FieldSpec::new(256).unwrap();
        assert_eq!(f.add(FieldElement(0x53), FieldElement(0x53)), FieldElement(0));
        let f16 = FieldSpec::new(16).unwrap();
        assert_eq!(f16.add(FieldElement(0x3), FieldElement(0x5)), FieldElement(0x6));
    }

    #[test]
    fn multiplicative_identities() {
        for q in [2u16, 16, 256] {
            let f = FieldSpec::new(q).unwrap();
            for a in 0..q as u32 {
                let a = FieldElement(a as u8);
                assert_eq!(f.mul(a, FieldElement::ONE), a);
                assert_eq!(f.mul(a, FieldElement::ZERO), FieldElement::ZERO);
            }
        }
    }

    #[test]
    fn known_products() {
        let f = FieldSpec::new(256).unwrap();
        assert_eq!(f.mul(FieldElement(0x53), FieldElement(0xCA)), FieldElement(0x01));
        let f16 = FieldSpec::new(16).unwrap();
        assert_eq!(f16.mul(FieldElement(0x8), FieldElement(0x2)), FieldElement(0x3));
    }

    #[test]
    fn mul_matches_peasant_multiplication() {
        for q in [16u16, 256] {
            let f = FieldSpec::new(q).unwrap();
            for a in 0..q as u32 {
                for b in 0..q as u32 {
                    let expect = peasant_mul(a, b, q as u32, f.reduction_polynomial());
                    assert_eq!(
                        f.mul(FieldElement(a as u8), FieldElement(b as u8)),
                        FieldElement(expect as u8),
                        "q={q} {a}*{b}"
                    );
                }
            }
        }
    }

    #[test]
    fn inverses() {
        let f = FieldSpec::new(256).unwrap();
        assert_eq!(f.inv(FieldElement(0x53)).unwrap(), FieldElement(0xCA));
        assert_eq!(f.inv(FieldElement::ONE).unwrap(), FieldElement::ONE);
        assert!(f.inv(FieldElement::ZERO).is_err());
        let f2 = FieldSpec::new(2).unwrap();
        assert_eq!(f2.inv(FieldElement(1)).unwrap(), FieldElement(1));
        for q in [2u16, 16, 256] {
            let f = FieldSpec::new(q).unwrap();
            for a in f.nonzero_elements() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), FieldElement::ONE);
            }
        }
    }

    /// Full field-axiom sweep for q = 2 and q = 16; sampled for q = 256.
    #[test]
    fn field_axioms() {
        for q in [2u16, 16] {
            let f = FieldSpec::new(q).unwrap();
            let all: Vec<_> = (0..q as u32).map(|v| FieldElement(v as u8)).collect();
            for &a in &all {
                for &b in &all {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.add(a, b), f.add(b, a));
                    for &c in &all {
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
        let f = FieldSpec::new(256).unwrap();
        let mut s: u32 = 0x12345;
        let mut next = || {
            s = s.wrapping_mul(1664525).wrapping_add(1013904223);
            FieldElement((s >> 16) as u8)
        };
        for _ in 0..4000 {
            let (a, b, c) = (next(), next(), next());
            assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        }
    }

    /// a^(q-1) = 1 for all nonzero a.
    #[test]
    fn fermat() {
        for q in [2u16, 16, 256] {
            let f = FieldSpec::new(q).unwrap();
            for a in f.nonzero_elements() {
                let mut acc = FieldElement::ONE;
                for _ in 0..q - 1 {
                    acc = f.mul(acc, a);
                }
                assert_eq!(acc, FieldElement::ONE, "q={q} a={}", a.0);
            }
        }
    }

    #[test]
    fn rejects_reducible_polynomial() {
        // x^8 + 1 = (x+1)^8 over GF(2)
        assert!(FieldSpec::with_polynomial(256, 0x101).is_err());
        assert!(FieldSpec::new(64).is_err());
    }
}
