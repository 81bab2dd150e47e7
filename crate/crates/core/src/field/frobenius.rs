//! Polynomials over Fq modulo E(x) = x^n - g^5 with n = 3^b, and fast
//! powering by powers of two.

use alloc::vec;
use alloc::vec::Vec;

use super::{Field, FieldError, FqElem, FqField, F16, G};

/// Fq[x]/(x^(3^b) - g^5). Elements are coefficient vectors of length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolyRing {
    fq: FqField,
    b: u32,
    n: usize,
}

impl PolyRing {
    pub fn new(a: u32, b: u32) -> PolyRing {
        PolyRing {
            fq: FqField::new(a),
            b,
            n: 3usize.pow(b),
        }
    }

    pub fn field(&self) -> &FqField {
        &self.fq
    }
    pub fn b(&self) -> u32 {
        self.b
    }
    /// Degree bound `n = 3^b`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn zero(&self) -> Vec<FqElem> {
        vec![self.fq.zero(); self.n]
    }

    pub fn one(&self) -> Vec<FqElem> {
        let mut p = self.zero();
        p[0] = self.fq.one();
        p
    }

    /// `x` reduced mod E (equal to `g^5` when `n = 1`).
    pub fn x(&self) -> Vec<FqElem> {
        self.reduce(&[self.fq.zero(), self.fq.one()])
    }

    fn g5(&self) -> FqElem {
        self.fq.embed(G.pow(5))
    }

    /// Reduces an arbitrary-length coefficient vector using `x^n = g^5`.
    pub fn reduce(&self, p: &[FqElem]) -> Vec<FqElem> {
        let mut out = self.zero();
        let g5 = self.g5();
        let mut mult = self.fq.one();
        for (chunk_index, chunk) in p.chunks(self.n).enumerate() {
            if chunk_index > 0 {
                mult = self.fq.mul(&mult, &g5);
            }
            for (k, c) in chunk.iter().enumerate() {
                if !self.fq.is_zero(c) {
                    out[k] = self.fq.add(&out[k], &self.fq.mul(c, &mult));
                }
            }
        }
        out
    }

    pub fn add(&self, f: &[FqElem], h: &[FqElem]) -> Vec<FqElem> {
        f.iter().zip(h).map(|(a, b)| self.fq.add(a, b)).collect()
    }

    pub fn mul(&self, f: &[FqElem], h: &[FqElem]) -> Vec<FqElem> {
        let fq = &self.fq;
        let mut wide = vec![fq.zero(); 2 * self.n];
        for (i, a) in f.iter().enumerate() {
            if fq.is_zero(a) {
                continue;
            }
            for (j, b) in h.iter().enumerate() {
                if !fq.is_zero(b) {
                    wide[i + j] = fq.add(&wide[i + j], &fq.mul(a, b));
                }
            }
        }
        self.reduce(&wide)
    }

    /// `f^e mod E` by square-and-multiply.
    pub fn pow(&self, f: &[FqElem], mut e: u128) -> Vec<FqElem> {
        let mut base = f.to_vec();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// `f^(2^t) mod E` by `t` squarings.
    pub fn square_repeatedly(&self, f: &[FqElem], t: u64) -> Vec<FqElem> {
        let mut r = f.to_vec();
        for _ in 0..t {
            r = self.mul(&r, &r);
        }
        r
    }

    /// `f^(2^t) mod E` without multiplying polynomials.
    ///
    /// Squaring is additive in characteristic 2, so
    /// `f^(2^t) = sum_i f_i^(2^t) x^(i 2^t)`. Since `x^(3n) = 1` and
    /// `x^n = g^5` mod E, the monomial `x^(i 2^t)` is `x^j` times
    /// `1`, `g^5` or `g^10` according to which third of `[0, 3n)` holds
    /// `i 2^t mod 3n`.
    pub fn frobenius_power(&self, f: &[FqElem], t: u64) -> Vec<FqElem> {
        let fq = &self.fq;
        let three_n = 3 * self.n as u64;
        let shift = mod_pow(2, t, three_n);
        let mults = [fq.one(), self.g5(), fq.embed(G.pow(10))];
        let mut out = self.zero();
        for (i, c) in f.iter().enumerate() {
            if fq.is_zero(c) {
                continue;
            }
            let e = (i as u64 * shift) % three_n;
            let (j, third) = ((e % self.n as u64) as usize, (e / self.n as u64) as usize);
            let term = fq.mul(&fq.frobenius(c, t), &mults[third]);
            out[j] = fq.add(&out[j], &term);
        }
        out
    }

    /// Horner evaluation at `y`.
    pub fn eval(&self, f: &[FqElem], y: &FqElem) -> FqElem {
        super::poly::eval(&self.fq, f, y)
    }

    /// Polynomial from `n * 4 * 5^a` bits, coefficient-major.
    pub fn from_bits(&self, bits: &[bool]) -> Result<Vec<FqElem>, FieldError> {
        let w = self.fq.bits() as usize;
        if bits.len() != self.n * w {
            return Err(FieldError::BitLength {
                expected: self.n * w,
                got: bits.len(),
            });
        }
        bits.chunks(w).map(|c| self.fq.from_bits(c)).collect()
    }

    pub fn to_bits(&self, f: &[FqElem]) -> Vec<bool> {
        f.iter().flat_map(|c| self.fq.to_bits(c)).collect()
    }

    /// Constant polynomial with an F16 value (test helper).
    pub fn constant(&self, c: F16) -> Vec<FqElem> {
        let mut p = self.zero();
        p[0] = self.fq.embed(c);
        p
    }
}

fn mod_pow(base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    let mut b = base % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}
