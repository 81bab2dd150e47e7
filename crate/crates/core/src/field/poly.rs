//! Dense polynomials over a [`Field`], little-endian, trailing zeros trimmed.

use alloc::vec;
use alloc::vec::Vec;

use super::{Field, FieldError};

pub type Poly<E> = Vec<E>;

pub fn trim<F: Field>(f: &F, mut p: Poly<F::Elem>) -> Poly<F::Elem> {
    while p.last().is_some_and(|c| f.is_zero(c)) {
        p.pop();
    }
    p
}

pub fn degree<F: Field>(f: &F, p: &[F::Elem]) -> Option<usize> {
    p.iter().rposition(|c| !f.is_zero(c))
}

/// The monomial `c x^k`.
pub fn monomial<F: Field>(f: &F, c: F::Elem, k: usize) -> Poly<F::Elem> {
    let mut p = vec![f.zero(); k + 1];
    p[k] = c;
    trim(f, p)
}

pub fn add<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    let len = a.len().max(b.len());
    let z = f.zero();
    let out = (0..len)
        .map(|k| f.add(a.get(k).unwrap_or(&z), b.get(k).unwrap_or(&z)))
        .collect();
    trim(f, out)
}

pub fn scale<F: Field>(f: &F, a: &[F::Elem], c: &F::Elem) -> Poly<F::Elem> {
    trim(f, a.iter().map(|x| f.mul(x, c)).collect())
}

pub fn mul<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![f.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if f.is_zero(x) {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = f.add(&out[i + j], &f.mul(x, y));
        }
    }
    trim(f, out)
}

type DivRem<E> = (Poly<E>, Poly<E>);

/// Quotient and remainder; `b` must be nonzero.
pub fn divrem<F: Field>(
    f: &F,
    a: &[F::Elem],
    b: &[F::Elem],
) -> Result<DivRem<F::Elem>, FieldError> {
    let db = degree(f, b).ok_or(FieldError::ZeroInverse)?;
    let lead_inv = f.inv(&b[db])?;
    let mut r: Poly<F::Elem> = trim(f, a.to_vec());
    let Some(da) = degree(f, &r) else {
        return Ok((Vec::new(), Vec::new()));
    };
    if da < db {
        return Ok((Vec::new(), r));
    }
    let mut q = vec![f.zero(); da - db + 1];
    for k in (db..=da).rev() {
        if f.is_zero(&r[k]) {
            continue;
        }
        let c = f.mul(&r[k], &lead_inv);
        for (t, bt) in b[..=db].iter().enumerate() {
            let idx = k - db + t;
            r[idx] = f.add(&r[idx], &f.mul(&c, bt));
        }
        q[k - db] = c;
    }
    r.truncate(db);
    Ok((trim(f, q), trim(f, r)))
}

pub fn rem<F: Field>(f: &F, a: &[F::Elem], m: &[F::Elem]) -> Poly<F::Elem> {
    divrem(f, a, m).expect("nonzero modulus").1
}

pub fn mulmod<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem], m: &[F::Elem]) -> Poly<F::Elem> {
    rem(f, &mul(f, a, b), m)
}

/// `a^e mod m` by square-and-multiply.
pub fn powmod<F: Field>(f: &F, a: &[F::Elem], mut e: u128, m: &[F::Elem]) -> Poly<F::Elem> {
    let mut base = rem(f, a, m);
    let mut acc = rem(f, &[f.one()], m);
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(f, &acc, &base, m);
        }
        base = mulmod(f, &base, &base, m);
        e >>= 1;
    }
    acc
}

/// `a^(2^k) mod m` by `k` squarings.
pub fn pow2k_mod<F: Field>(f: &F, a: &[F::Elem], k: u64, m: &[F::Elem]) -> Poly<F::Elem> {
    let mut r = rem(f, a, m);
    for _ in 0..k {
        r = mulmod(f, &r, &r, m);
    }
    r
}

/// Monic gcd (empty if both are zero).
pub fn gcd<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Poly<F::Elem> {
    let mut x = trim(f, a.to_vec());
    let mut y = trim(f, b.to_vec());
    while !y.is_empty() {
        let r = rem(f, &x, &y);
        x = y;
        y = r;
    }
    make_monic(f, x)
}

pub fn make_monic<F: Field>(f: &F, p: Poly<F::Elem>) -> Poly<F::Elem> {
    match p.last() {
        None => p,
        Some(lead) => {
            let inv = f.inv(lead).expect("nonzero leading coefficient");
            scale(f, &p, &inv)
        }
    }
}

/// Inverse of `a` modulo `m` by the extended Euclidean algorithm.
pub fn inverse_mod<F: Field>(
    f: &F,
    a: &[F::Elem],
    m: &[F::Elem],
) -> Result<Poly<F::Elem>, FieldError> {
    // invariant: s_k * a = r_k (mod m)
    let (mut r0, mut r1) = (trim(f, m.to_vec()), rem(f, a, m));
    let (mut s0, mut s1): (Poly<F::Elem>, Poly<F::Elem>) = (Vec::new(), vec![f.one()]);
    while !r1.is_empty() {
        let (q, r) = divrem(f, &r0, &r1)?;
        let s = add(f, &s0, &mul(f, &q, &s1));
        r0 = core::mem::replace(&mut r1, r);
        s0 = core::mem::replace(&mut s1, s);
    }
    match degree(f, &r0) {
        Some(0) => {
            let c = f.inv(&r0[0])?;
            Ok(rem(f, &scale(f, &s0, &c), m))
        }
        _ => Err(FieldError::ZeroInverse),
    }
}

/// Horner evaluation.
pub fn eval<F: Field>(f: &F, p: &[F::Elem], y: &F::Elem) -> F::Elem {
    p.iter()
        .rev()
        .fold(f.zero(), |acc, c| f.add(&f.mul(&acc, y), c))
}
