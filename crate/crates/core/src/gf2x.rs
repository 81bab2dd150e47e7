//! Packed polynomials over GF(2) and arithmetic in GF(2^L).

use alloc::vec;
use alloc::vec::Vec;

/// Polynomial over GF(2); bit `k` of limb `k / 64` is the coefficient of x^k.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Gf2Poly {
    limbs: Vec<u64>,
}

impl Gf2Poly {
    pub fn zero() -> Self {
        Gf2Poly { limbs: Vec::new() }
    }

    pub fn one() -> Self {
        Gf2Poly { limbs: vec![1] }
    }

    /// `x^k`.
    pub fn monomial(k: usize) -> Self {
        let mut p = Gf2Poly {
            limbs: vec![0; k / 64 + 1],
        };
        p.limbs[k / 64] = 1 << (k % 64);
        p
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut limbs = vec![0u64; bits.len().div_ceil(64)];
        for (k, &b) in bits.iter().enumerate() {
            if b {
                limbs[k / 64] |= 1 << (k % 64);
            }
        }
        Gf2Poly { limbs }.trimmed()
    }

    pub fn from_u64(v: u64) -> Self {
        Gf2Poly { limbs: vec![v] }.trimmed()
    }

    /// Coefficients of x^0..x^(len-1).
    pub fn to_bits(&self, len: usize) -> Vec<bool> {
        (0..len).map(|k| self.coeff(k)).collect()
    }

    pub fn coeff(&self, k: usize) -> bool {
        self.limbs
            .get(k / 64)
            .is_some_and(|l| (l >> (k % 64)) & 1 == 1)
    }

    fn trimmed(mut self) -> Self {
        while self.limbs.last() == Some(&0) {
            self.limbs.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        let top = self.limbs.len().checked_sub(1)?;
        Some(top * 64 + 63 - self.limbs[top].leading_zeros() as usize)
    }

    pub fn add(&self, o: &Gf2Poly) -> Gf2Poly {
        let len = self.limbs.len().max(o.limbs.len());
        let limbs = (0..len)
            .map(|k| self.limbs.get(k).unwrap_or(&0) ^ o.limbs.get(k).unwrap_or(&0))
            .collect();
        Gf2Poly { limbs }.trimmed()
    }

    fn shl(&self, s: usize) -> Gf2Poly {
        if self.is_zero() {
            return self.clone();
        }
        let (w, b) = (s / 64, s % 64);
        let mut limbs = vec![0u64; self.limbs.len() + w + 1];
        for (k, &l) in self.limbs.iter().enumerate() {
            limbs[k + w] |= l << b;
            if b > 0 {
                limbs[k + w + 1] |= l >> (64 - b);
            }
        }
        Gf2Poly { limbs }.trimmed()
    }

    pub fn mul(&self, o: &Gf2Poly) -> Gf2Poly {
        let mut acc = Gf2Poly::zero();
        let Some(d) = o.degree() else {
            return acc;
        };
        for k in 0..=d {
            if o.coeff(k) {
                acc = acc.add(&self.shl(k));
            }
        }
        acc
    }

    pub fn rem(&self, m: &Gf2Poly) -> Gf2Poly {
        let dm = m.degree().expect("nonzero modulus");
        let mut r = self.clone();
        while let Some(dr) = r.degree() {
            if dr < dm {
                break;
            }
            r = r.add(&m.shl(dr - dm));
        }
        r
    }

    pub fn mulmod(&self, o: &Gf2Poly, m: &Gf2Poly) -> Gf2Poly {
        self.mul(o).rem(m)
    }

    pub fn gcd(&self, o: &Gf2Poly) -> Gf2Poly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a
    }

    /// Ben-Or irreducibility test.
    pub fn is_irreducible(&self) -> bool {
        let Some(d) = self.degree() else {
            return false;
        };
        if d == 0 {
            return false;
        }
        let x = Gf2Poly::monomial(1);
        let mut xq = x.rem(self);
        for _ in 1..=d / 2 {
            xq = xq.mulmod(&xq, self);
            if self.gcd(&xq.add(&x)).degree() != Some(0) {
                return false;
            }
        }
        true
    }

    /// The irreducible polynomial of degree `deg >= 1` whose lower
    /// coefficients, read as a little-endian integer, are smallest.
    pub fn smallest_irreducible(deg: usize) -> Gf2Poly {
        assert!(deg >= 1, "degree must be positive");
        let top = Gf2Poly::monomial(deg);
        let mut lower = 0u64;
        loop {
            let p = top.add(&Gf2Poly::from_u64(lower));
            if p.is_irreducible() {
                return p;
            }
            lower += 1;
        }
    }
}
