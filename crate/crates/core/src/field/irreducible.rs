//! Irreducibility tests (test-support utilities with explicit caps).

use alloc::vec;
use alloc::vec::Vec;

use super::poly::{self, Poly};
use super::{F16Field, Field, FieldError, F16};

/// Largest degree accepted over F16.
pub const F16_DEGREE_CAP: usize = 27;
/// Largest degree accepted over a proper extension.
pub const EXT_DEGREE_CAP: usize = 9;

/// Ben-Or: `p` (degree `d >= 1`) is irreducible iff
/// `gcd(p, x^(Q^i) - x) = 1` for every `i <= d/2`.
pub fn check_irreducible<F: Field>(f: &F, p: &[F::Elem]) -> Result<bool, FieldError> {
    let p = poly::trim(f, p.to_vec());
    let Some(d) = poly::degree(f, &p) else {
        return Ok(false);
    };
    let cap = if f.bits() == 4 {
        F16_DEGREE_CAP
    } else {
        EXT_DEGREE_CAP
    };
    if d > cap {
        return Err(FieldError::CapExceeded { degree: d, cap });
    }
    if d == 0 {
        return Ok(false);
    }
    let x = poly::monomial(f, f.one(), 1);
    let mut xq = poly::rem(f, &x, &p);
    for _ in 1..=d / 2 {
        xq = poly::pow2k_mod(f, &xq, f.bits() as u64, &p);
        let g = poly::gcd(f, &p, &poly::add(f, &xq, &x));
        if poly::degree(f, &g) != Some(0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rabin: `p` of degree `d` is irreducible iff `x^(Q^d) = x mod p` and
/// `gcd(p, x^(Q^(d/r)) - x) = 1` for every prime `r | d`.
pub fn rabin_irreducible<F: Field>(f: &F, p: &[F::Elem]) -> bool {
    let p = poly::trim(f, p.to_vec());
    let Some(d) = poly::degree(f, &p) else {
        return false;
    };
    if d == 0 {
        return false;
    }
    let x = poly::monomial(f, f.one(), 1);
    let x_mod = poly::rem(f, &x, &p);
    let frob = |k: usize| poly::pow2k_mod(f, &x_mod, f.bits() as u64 * k as u64, &p);
    if frob(d) != x_mod {
        return false;
    }
    prime_factors(d as u64).into_iter().all(|r| {
        let g = poly::gcd(f, &p, &poly::add(f, &frob(d / r as usize), &x));
        poly::degree(f, &g) == Some(0)
    })
}

/// Binomial criterion for `x^t - c` over a field of size `Q`, where `c` has
/// multiplicative order `ord`: irreducible iff every prime factor of `t`
/// divides `ord` but not `(Q - 1)/ord`, and `4 | Q - 1` whenever `4 | t`.
pub fn binomial_irreducible(t: u64, ord: u128, q_minus_1: u128) -> bool {
    let cofactor = q_minus_1 / ord;
    prime_factors(t)
        .into_iter()
        .all(|r| ord.is_multiple_of(r as u128) && !cofactor.is_multiple_of(r as u128))
        && (!t.is_multiple_of(4) || q_minus_1.is_multiple_of(4))
}

/// Multiplicative order of a nonzero F16 element.
pub fn f16_order(c: F16) -> u128 {
    (1..=15u64).find(|&k| c.pow(k) == F16::ONE).unwrap_or(0) as u128
}

/// Exhaustive search for a monic divisor of degree `1..=max_degree` over F16.
pub fn f16_small_divisor(p: &[F16], max_degree: usize) -> Option<Poly<F16>> {
    let f = F16Field;
    let d = poly::degree(&f, p)?;
    for k in 1..=max_degree.min(d.saturating_sub(1)) {
        let count = 16u64.pow(k as u32);
        for lower in 0..count {
            let mut cand: Vec<F16> = (0..k).map(|s| F16::new((lower >> (4 * s)) as u8)).collect();
            cand.push(F16::ONE);
            if poly::rem(&f, p, &cand).is_empty() {
                return Some(cand);
            }
        }
    }
    None
}

/// A root of `p` among `candidates`, if any.
pub fn find_root<F: Field>(
    f: &F,
    p: &[F::Elem],
    candidates: impl IntoIterator<Item = F::Elem>,
) -> Option<F::Elem> {
    candidates
        .into_iter()
        .find(|y| f.is_zero(&poly::eval(f, p, y)))
}

/// Distinct prime factors, ascending.
pub fn prime_factors(mut t: u64) -> Vec<u64> {
    let mut out = vec![];
    let mut r = 2;
    while r * r <= t {
        if t.is_multiple_of(r) {
            out.push(r);
            while t.is_multiple_of(r) {
                t /= r;
            }
        }
        r += 1;
    }
    if t > 1 {
        out.push(t);
    }
    out
}

/// `x^t - c` as a coefficient vector.
pub fn binomial<F: Field>(f: &F, t: usize, c: F::Elem) -> Poly<F::Elem> {
    let mut p = vec![f.zero(); t + 1];
    p[0] = c; // -c = c in characteristic 2
    p[t] = f.one();
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FqField, G};

    #[test]
    fn reducible_square() {
        let f = F16Field;
        let p = binomial(&f, 2, G.pow(2));
        assert!(!check_irreducible(&f, &p).unwrap());
        assert!(!rabin_irreducible(&f, &p));
        assert_eq!(find_root(&f, &p, F16::all()), Some(G));
    }

    #[test]
    fn tower_modulus_degree_five() {
        let f = F16Field;
        let p = binomial(&f, 5, G.pow(3));
        assert!(check_irreducible(&f, &p).unwrap());
        assert!(f16_small_divisor(&p, 2).is_none());
    }

    #[test]
    fn cubic_over_extension() {
        let fq = FqField::new(1);
        let p = binomial(&fq, 3, fq.embed(G.pow(5)));
        assert!(check_irreducible(&fq, &p).unwrap());
        assert!(rabin_irreducible(&fq, &p));
    }

    #[test]
    fn cap_enforced() {
        let f = F16Field;
        let p = binomial(&f, 28, F16::ONE);
        assert!(matches!(
            check_irreducible(&f, &p),
            Err(FieldError::CapExceeded {
                degree: 28,
                cap: 27
            })
        ));
    }

    #[test]
    fn binomial_criterion_examples() {
        // x^2 - g^2 over F16: 2 does not divide ord(g^2) = 15
        assert!(!binomial_irreducible(2, f16_order(G.pow(2)), 15));
        assert!(binomial_irreducible(25, f16_order(G.pow(3)), 15));
        assert!(binomial_irreducible(9, f16_order(G.pow(5)), (1 << 20) - 1));
    }
}
