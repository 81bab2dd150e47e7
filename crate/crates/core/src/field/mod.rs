//! Characteristic-2 field towers: F16 = F2[w]/(w^4 + w + 1), its extensions
//! Fq = F16[z]/(z^(5^a) - g^3), and polynomials over them modulo
//! E(x) = x^(3^b) - g^5.
//!
//! The generator is pinned to g = w. Coefficient vectors are little-endian.

mod f16;
mod fq;
pub mod frobenius;
pub mod irreducible;
pub mod poly;

pub use f16::{F16Field, F16, G};
pub use fq::{FqElem, FqField};

use core::fmt::Debug;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FieldError {
    #[error("inverse of zero")]
    ZeroInverse,
    #[error("tower mismatch: element has {got} coefficients, field expects {expected}")]
    TowerMismatch { expected: usize, got: usize },
    #[error("degree {degree} exceeds the test cap {cap}")]
    CapExceeded { degree: usize, cap: usize },
    #[error("bit length {got} does not match {expected}")]
    BitLength { expected: usize, got: usize },
}

/// A finite field of characteristic 2 with a context value (the tower
/// parameter for Fq).
pub trait Field {
    type Elem: Clone + PartialEq + Eq + Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Result<Self::Elem, FieldError>;
    /// Embedding of F16 as constants.
    fn embed(&self, c: F16) -> Self::Elem;
    /// `log2 |F|`.
    fn bits(&self) -> u32;

    fn is_zero(&self, a: &Self::Elem) -> bool {
        *a == self.zero()
    }

    fn square(&self, a: &Self::Elem) -> Self::Elem {
        self.mul(a, a)
    }

    fn pow(&self, a: &Self::Elem, mut e: u128) -> Self::Elem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.square(&base);
            e >>= 1;
        }
        acc
    }

    /// `a^(2^t)`; `t` is reduced modulo the order of Frobenius.
    fn frobenius(&self, a: &Self::Elem, t: u64) -> Self::Elem {
        let mut r = a.clone();
        for _ in 0..t % self.bits() as u64 {
            r = self.square(&r);
        }
        r
    }
}
