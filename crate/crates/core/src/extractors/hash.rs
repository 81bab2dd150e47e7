use alloc::format;
use alloc::vec::Vec;

use super::{Extractor, ExtractorError, ExtractorKind, ExtractorSpec};
use crate::gf2x::Gf2Poly;

/// Multiply-then-truncate hashing over GF(2^ell).
///
/// The first `min(d, ell)` seed bits give the multiplier `a` (zero-padded
/// to `ell` bits); the output is the low `s` bits of `a * x`. Seed bits
/// beyond `ell` are XORed onto the output, so with `d = ell + s` the family
/// is the full pairwise-independent family `x -> (a x)|_s + b`. The zero
/// seed selects the zero map.
#[derive(Debug, Clone)]
pub struct HashExtractor {
    spec: ExtractorSpec,
    modulus: Gf2Poly,
}

impl HashExtractor {
    pub fn new(ell: usize, d: usize, s: usize, k: usize, eps: f64) -> Result<Self, ExtractorError> {
        let spec = ExtractorSpec::new(ell, d, s, k, eps, ExtractorKind::Hash)?;
        if ell == 0 {
            return Err(ExtractorError::InvalidSpec(
                "source length must be positive",
            ));
        }
        if s > ell {
            return Err(ExtractorError::InvalidSpec("output longer than source"));
        }
        if d > ell + s {
            return Err(ExtractorError::Infeasible(format!(
                "seed length {d} exceeds ell + s = {}",
                ell + s
            )));
        }
        // small slack so that exact boundary cases like eps = 1/4 pass
        if s as f64 > k as f64 - 2.0 * libm::log2(1.0 / eps) + 1e-9 {
            return Err(ExtractorError::Regime { s, k, eps });
        }
        Ok(HashExtractor {
            spec,
            modulus: Gf2Poly::smallest_irreducible(ell),
        })
    }

    pub fn modulus(&self) -> &Gf2Poly {
        &self.modulus
    }
}

impl Extractor for HashExtractor {
    fn spec(&self) -> &ExtractorSpec {
        &self.spec
    }

    fn extract(&self, x: &[bool], y: &[bool]) -> Result<Vec<bool>, ExtractorError> {
        self.spec.check_input(x, y)?;
        let ell = self.spec.ell;
        let split = y.len().min(ell);
        let a = Gf2Poly::from_bits(&y[..split]);
        let prod = a.mulmod(&Gf2Poly::from_bits(x), &self.modulus);
        let mut out = prod.to_bits(self.spec.s);
        for (o, &b) in out.iter_mut().zip(&y[split..]) {
            *o ^= b;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{bits_from_u64, bits_to_u64};

    #[test]
    fn zero_seed_is_zero_map() {
        let e = HashExtractor::new(10, 4, 2, 6, 0.25).unwrap();
        for x in 0..1024 {
            assert_eq!(
                e.extract(&bits_from_u64(x, 10), &[false; 4]).unwrap(),
                [false; 2]
            );
        }
    }

    #[test]
    fn regime_enforced() {
        assert!(matches!(
            HashExtractor::new(10, 4, 3, 6, 0.25),
            Err(ExtractorError::Regime { s: 3, k: 6, .. })
        ));
        assert!(HashExtractor::new(10, 13, 2, 6, 0.25).is_err());
    }

    #[test]
    fn matches_integer_carryless_oracle() {
        // GF(2^8) with modulus 0x11b, the AES field
        let e = HashExtractor::new(8, 8, 8, 8, 0.0625).unwrap_err();
        assert!(matches!(e, ExtractorError::Regime { .. }));
        let e = HashExtractor::new(8, 8, 4, 8, 0.25).unwrap();
        assert_eq!(bits_to_u64(&e.modulus().to_bits(9)), 0x11b);
        fn gmul(mut a: u16, mut b: u16) -> u16 {
            let mut p = 0;
            while b > 0 {
                if b & 1 == 1 {
                    p ^= a;
                }
                a <<= 1;
                if a & 0x100 != 0 {
                    a ^= 0x11b;
                }
                b >>= 1;
            }
            p
        }
        for (x, a) in [(0x53u64, 0xcau64), (0x57, 0x83), (0xff, 0x01), (0x12, 0x34)] {
            let out = e
                .extract(&bits_from_u64(x, 8), &bits_from_u64(a, 8))
                .unwrap();
            assert_eq!(bits_to_u64(&out), (gmul(x as u16, a as u16) & 0xf) as u64);
        }
        // 0x53 and 0xca are inverses
        let out = e
            .extract(&bits_from_u64(0x53, 8), &bits_from_u64(0xca, 8))
            .unwrap();
        assert_eq!(bits_to_u64(&out), 1);
    }

    #[test]
    fn affine_part_uses_trailing_seed_bits() {
        let e = HashExtractor::new(6, 8, 2, 6, 0.25).unwrap();
        let x = bits_from_u64(0b101101, 6);
        let mut y = bits_from_u64(0, 8);
        y[6] = true;
        assert_eq!(e.extract(&x, &y).unwrap(), [true, false]);
    }

    #[test]
    fn regression_vector() {
        let e = HashExtractor::new(10, 4, 2, 6, 0.25).unwrap();
        let x = bits_from_u64(0b1011001110, 10);
        let out: Vec<u64> = (0..16)
            .map(|y| bits_to_u64(&e.extract(&x, &bits_from_u64(y, 4)).unwrap()))
            .collect();
        assert_eq!(out, REGRESSION);
        // linear in the seed
        for (a, b) in [(1, 2), (5, 9), (6, 12)] {
            assert_eq!(out[a ^ b], out[a] ^ out[b]);
        }
    }

    const REGRESSION: [u64; 16] = [0, 2, 1, 3, 2, 0, 3, 1, 1, 3, 0, 2, 3, 1, 2, 0];
}
