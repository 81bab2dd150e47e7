use core::fmt;

use super::{Field, FieldError};

/// Element of F2[w]/(w^4 + w + 1), stored as the coefficient nibble.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct F16(u8);

/// The pinned generator g = w.
pub const G: F16 = F16(0x2);

const MODULUS: u8 = 0x13;

const fn clmul_mod(mut a: u8, mut b: u8) -> u8 {
    let mut r = 0u8;
    while b != 0 {
        if b & 1 == 1 {
            r ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & 0x10 != 0 {
            a ^= MODULUS;
        }
    }
    r
}

const MUL_TABLE: [[u8; 16]; 16] = {
    let mut t = [[0u8; 16]; 16];
    let mut a = 0;
    while a < 16 {
        let mut b = 0;
        while b < 16 {
            t[a][b] = clmul_mod(a as u8, b as u8);
            b += 1;
        }
        a += 1;
    }
    t
};

const INV_TABLE: [u8; 16] = {
    let mut t = [0u8; 16];
    let mut a = 1;
    while a < 16 {
        let mut b = 1;
        while b < 16 {
            if MUL_TABLE[a][b] == 1 {
                t[a] = b as u8;
            }
            b += 1;
        }
        a += 1;
    }
    t
};

impl F16 {
    pub const ZERO: F16 = F16(0);
    pub const ONE: F16 = F16(1);

    /// Low four bits of `v`.
    pub const fn new(v: u8) -> F16 {
        F16(v & 0xf)
    }

    pub const fn value(self) -> u8 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, o: F16) -> F16 {
        F16(self.0 ^ o.0)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, o: F16) -> F16 {
        F16(MUL_TABLE[self.0 as usize][o.0 as usize])
    }

    pub fn inv(self) -> Result<F16, FieldError> {
        if self.0 == 0 {
            Err(FieldError::ZeroInverse)
        } else {
            Ok(F16(INV_TABLE[self.0 as usize]))
        }
    }

    pub fn pow(self, mut e: u64) -> F16 {
        let mut base = self;
        let mut acc = F16::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            e >>= 1;
        }
        acc
    }

    pub fn all() -> impl Iterator<Item = F16> {
        (0..16).map(F16)
    }
}

impl fmt::Debug for F16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:x}", self.0)
    }
}

impl fmt::Display for F16 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:x}", self.0)
    }
}

/// F16 as a [`Field`] context.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct F16Field;

impl Field for F16Field {
    type Elem = F16;

    fn zero(&self) -> F16 {
        F16::ZERO
    }
    fn one(&self) -> F16 {
        F16::ONE
    }
    fn add(&self, a: &F16, b: &F16) -> F16 {
        a.add(*b)
    }
    fn mul(&self, a: &F16, b: &F16) -> F16 {
        a.mul(*b)
    }
    fn inv(&self, a: &F16) -> Result<F16, FieldError> {
        a.inv()
    }
    fn embed(&self, c: F16) -> F16 {
        c
    }
    fn bits(&self) -> u32 {
        4
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defining_relation() {
        let w = F16::new(2);
        assert_eq!(w.pow(4), w.add(F16::ONE));
    }

    #[test]
    fn generator_has_order_15() {
        let orders: alloc::vec::Vec<u64> = (1..=15).filter(|&k| G.pow(k) == F16::ONE).collect();
        assert_eq!(orders, [15]);
    }

    #[test]
    fn axioms_exhaustive() {
        for a in F16::all() {
            assert_eq!(a.add(a), F16::ZERO);
            if !a.is_zero() {
                assert_eq!(a.mul(a.inv().unwrap()), F16::ONE);
            }
            for b in F16::all() {
                assert_eq!(a.mul(b), b.mul(a));
                for c in F16::all() {
                    assert_eq!(a.mul(b.add(c)), a.mul(b).add(a.mul(c)));
                    assert_eq!(a.mul(b).mul(c), a.mul(b.mul(c)));
                }
            }
        }
        assert_eq!(F16::ZERO.inv(), Err(FieldError::ZeroInverse));
    }
}
