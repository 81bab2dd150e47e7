use alloc::vec;
use alloc::vec::Vec;

use super::f16::{F16Field, F16, G};
use super::{poly, Field, FieldError};

/// Element of F16[z]/(z^(5^a) - g^3): exactly `5^a` coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct FqElem(Vec<F16>);

impl FqElem {
    pub fn coeffs(&self) -> &[F16] {
        &self.0
    }
}

/// Fq = F16[z]/(z^(5^a) - g^3), of size `16^(5^a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FqField {
    a: u32,
    len: usize,
}

impl FqField {
    pub fn new(a: u32) -> FqField {
        FqField {
            a,
            len: 5usize.pow(a),
        }
    }

    pub fn tower(&self) -> u32 {
        self.a
    }

    /// Number of F16 coefficients, `5^a`.
    pub fn degree(&self) -> usize {
        self.len
    }

    /// The modulus `z^(5^a) - g^3` as a polynomial over F16.
    pub fn modulus(&self) -> Vec<F16> {
        let mut m = vec![F16::ZERO; self.len + 1];
        m[0] = G.pow(3);
        m[self.len] = F16::ONE;
        m
    }

    pub fn elem(&self, coeffs: Vec<F16>) -> Result<FqElem, FieldError> {
        if coeffs.len() != self.len {
            return Err(FieldError::TowerMismatch {
                expected: self.len,
                got: coeffs.len(),
            });
        }
        Ok(FqElem(coeffs))
    }

    /// The class of `z`.
    pub fn z(&self) -> FqElem {
        let mut c = vec![F16::ZERO; self.len];
        if self.len == 1 {
            // z = g^3 when the tower is trivial
            c[0] = G.pow(3);
        } else {
            c[1] = F16::ONE;
        }
        FqElem(c)
    }

    /// Element from `4 * 5^a` bits, four little-endian bits per coefficient.
    pub fn from_bits(&self, bits: &[bool]) -> Result<FqElem, FieldError> {
        if bits.len() != 4 * self.len {
            return Err(FieldError::BitLength {
                expected: 4 * self.len,
                got: bits.len(),
            });
        }
        Ok(FqElem(
            bits.chunks(4)
                .map(|c| {
                    F16::new(
                        c.iter()
                            .enumerate()
                            .fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k)),
                    )
                })
                .collect(),
        ))
    }

    pub fn to_bits(&self, e: &FqElem) -> Vec<bool> {
        e.0.iter()
            .flat_map(|c| (0..4).map(move |k| (c.value() >> k) & 1 == 1))
            .collect()
    }

    /// Element from the low `4 * 5^a` bits of an integer (test helper).
    pub fn from_u128(&self, v: u128) -> FqElem {
        FqElem(
            (0..self.len)
                .map(|k| F16::new(if 4 * k < 128 { (v >> (4 * k)) as u8 } else { 0 }))
                .collect(),
        )
    }
}

impl Field for FqField {
    type Elem = FqElem;

    fn zero(&self) -> FqElem {
        FqElem(vec![F16::ZERO; self.len])
    }

    fn one(&self) -> FqElem {
        let mut c = vec![F16::ZERO; self.len];
        c[0] = F16::ONE;
        FqElem(c)
    }

    fn add(&self, a: &FqElem, b: &FqElem) -> FqElem {
        debug_assert_eq!(a.0.len(), self.len);
        debug_assert_eq!(b.0.len(), self.len);
        FqElem(a.0.iter().zip(&b.0).map(|(x, y)| x.add(*y)).collect())
    }

    fn mul(&self, a: &FqElem, b: &FqElem) -> FqElem {
        let n = self.len;
        let mut wide = vec![F16::ZERO; 2 * n];
        for (i, x) in a.0.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.0.iter().enumerate() {
                wide[i + j] = wide[i + j].add(x.mul(*y));
            }
        }
        // z^n = g^3
        let g3 = G.pow(3);
        for k in (n..2 * n).rev() {
            let c = wide[k];
            if !c.is_zero() {
                wide[k - n] = wide[k - n].add(c.mul(g3));
            }
        }
        wide.truncate(n);
        FqElem(wide)
    }

    fn inv(&self, a: &FqElem) -> Result<FqElem, FieldError> {
        if a.0.len() != self.len {
            return Err(FieldError::TowerMismatch {
                expected: self.len,
                got: a.0.len(),
            });
        }
        let f = F16Field;
        let r = poly::inverse_mod(&f, &a.0, &self.modulus())?;
        let mut c = r;
        c.resize(self.len, F16::ZERO);
        Ok(FqElem(c))
    }

    fn embed(&self, c: F16) -> FqElem {
        let mut v = vec![F16::ZERO; self.len];
        v[0] = c;
        FqElem(v)
    }

    fn bits(&self) -> u32 {
        4 * self.len as u32
    }
}
