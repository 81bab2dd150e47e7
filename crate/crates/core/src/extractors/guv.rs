use alloc::format;
use alloc::vec::Vec;

use super::{Extractor, ExtractorError, ExtractorKind, ExtractorSpec, WalkExtractor};
use crate::field::frobenius::PolyRing;
use crate::field::FqElem;

/// Default cap on the tower index `a` (so `log q <= 4 * 5^2 = 100`).
pub const DEFAULT_MAX_TOWER: u32 = 2;

/// Parameters of the condenser for sources of `ell` bits, entropy `k`,
/// error `eps` and rate constant `alpha`. All logarithms are base 2.
#[derive(Debug, Clone, PartialEq)]
pub struct GuvParams {
    pub ell: usize,
    pub k: usize,
    pub eps: f64,
    pub alpha: f64,
    /// `log z` with `z = 3 ell k / eps`.
    pub log_z: f64,
    /// Tower index: `q = 16^(5^a)`.
    pub a: u32,
    pub log_q: usize,
    /// `log z / (log q - log z)`, the largest `alpha' <= alpha` for this `q`.
    pub alpha_prime: f64,
    /// `n = 3^b`, the smallest power of 3 above `ell / log q`.
    pub b: u32,
    pub n: usize,
    /// `log h0 = log z / alpha'`.
    pub log_h0: f64,
    /// `h = 2^log_h`, the smallest power of 2 at least `h0`.
    pub log_h: usize,
    /// `m = ceil(k / log h)`.
    pub m: usize,
}

/// Ceiling that ignores floating-point noise just above an integer.
fn ceil_exact(v: f64) -> f64 {
    let r = libm::round(v);
    if libm::fabs(v - r) < 1e-9 {
        r
    } else {
        libm::ceil(v)
    }
}

impl GuvParams {
    pub fn derive(
        ell: usize,
        k: usize,
        eps: f64,
        alpha: f64,
        max_tower: u32,
    ) -> Result<Self, ExtractorError> {
        if ell == 0 || k == 0 || k > ell {
            return Err(ExtractorError::InvalidSpec("need 1 <= k <= ell"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(ExtractorError::InvalidSpec("error must lie in (0, 1)"));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(ExtractorError::InvalidSpec("alpha must lie in (0, 1/2)"));
        }
        let log_z = libm::log2(3.0 * ell as f64 * k as f64) + libm::log2(1.0 / eps);
        let need = log_z * (1.0 + 1.0 / alpha);
        let a = (0..=max_tower)
            .find(|&a| 4.0 * libm::pow(5.0, a as f64) >= need - 1e-9)
            .ok_or_else(|| {
                ExtractorError::Infeasible(format!(
                    "log q must reach {need:.3}, tower cap {max_tower} allows {}",
                    4 * 5usize.pow(max_tower)
                ))
            })?;
        let log_q = 4 * 5usize.pow(a);
        let alpha_prime = log_z / (log_q as f64 - log_z);
        let mut b = 0;
        while 3usize.pow(b) * log_q <= ell {
            b += 1;
        }
        let log_h0 = log_q as f64 - log_z;
        let log_h = ceil_exact(log_h0) as usize;
        let m = k.div_ceil(log_h);
        Ok(GuvParams {
            ell,
            k,
            eps,
            alpha,
            log_z,
            a,
            log_q,
            alpha_prime,
            b,
            n: 3usize.pow(b),
            log_h0,
            log_h,
            m,
        })
    }

    /// Seed length, `log q`.
    pub fn d(&self) -> usize {
        self.log_q
    }

    /// Output length, `(m + 1) log q`.
    pub fn s(&self) -> usize {
        (self.m + 1) * self.log_q
    }

    pub fn ring(&self) -> PolyRing {
        PolyRing::new(self.a, self.b)
    }

    /// Re-checks the relations between the derived quantities.
    pub fn check(&self) -> Result<(), ExtractorError> {
        let bad = |what: &str| {
            Err(ExtractorError::Infeasible(format!(
                "inconsistent parameters: {what}"
            )))
        };
        if self.log_q != 4 * 5usize.pow(self.a) {
            return bad("q is not 16^(5^a)");
        }
        if self.alpha_prime <= 0.0 || self.alpha_prime > self.alpha + 1e-12 {
            return bad("alpha' outside (0, alpha]");
        }
        if self.n != 3usize.pow(self.b) || self.n * self.log_q <= self.ell {
            return bad("q^n does not exceed N");
        }
        if (self.log_h as f64) < self.log_h0 - 1e-9 || self.log_h == 0 {
            return bad("h below h0");
        }
        if self.m != self.k.div_ceil(self.log_h) {
            return bad("m is not ceil(k / log h)");
        }
        Ok(())
    }
}

/// `(y, f(y), (f^h mod E)(y), ..., (f^(h^(m-1)) mod E)(y))` with
/// `h = 2^log_h`; each power comes from the previous one by Frobenius.
pub fn guv_expander(
    ring: &PolyRing,
    f: &[FqElem],
    y: &FqElem,
    log_h: usize,
    m: usize,
) -> Result<Vec<FqElem>, ExtractorError> {
    if f.len() != ring.n() {
        return Err(ExtractorError::Length {
            what: "polynomial",
            expected: ring.n(),
            got: f.len(),
        });
    }
    if y.coeffs().len() != ring.field().degree() {
        return Err(ExtractorError::Length {
            what: "field element",
            expected: ring.field().degree(),
            got: y.coeffs().len(),
        });
    }
    let mut out = Vec::with_capacity(m + 1);
    out.push(y.clone());
    let mut g = f.to_vec();
    for i in 0..m {
        if i > 0 {
            g = ring.frobenius_power(&g, log_h as u64);
        }
        out.push(ring.eval(&g, y));
    }
    Ok(out)
}

/// The condenser: `x` is zero-padded and read as `n` coefficients in Fq,
/// `y` as one element of Fq; the output is `Gamma(f, y)` packed back to bits.
pub fn guv_condense(p: &GuvParams, x: &[bool], y: &[bool]) -> Result<Vec<bool>, ExtractorError> {
    if x.len() != p.ell {
        return Err(ExtractorError::Length {
            what: "source",
            expected: p.ell,
            got: x.len(),
        });
    }
    if y.len() != p.d() {
        return Err(ExtractorError::Length {
            what: "seed",
            expected: p.d(),
            got: y.len(),
        });
    }
    let ring = p.ring();
    let mut padded = x.to_vec();
    padded.resize(p.n * p.log_q, false);
    let f = ring.from_bits(&padded)?;
    let fq = ring.field();
    let ye = fq.from_bits(y)?;
    let coords = guv_expander(&ring, &f, &ye, p.log_h, p.m)?;
    Ok(coords.iter().flat_map(|c| fq.to_bits(c)).collect())
}

/// Condense, then extract with the walk extractor. The seed is the
/// condenser seed followed by the walk seed.
#[derive(Debug, Clone)]
pub struct GuvExtractor {
    spec: ExtractorSpec,
    params: GuvParams,
    walk: WalkExtractor,
}

impl GuvExtractor {
    pub fn new(
        ell: usize,
        k: usize,
        eps: f64,
        alpha: f64,
        max_tower: u32,
    ) -> Result<Self, ExtractorError> {
        let params = GuvParams::derive(ell, k, eps, alpha, max_tower)?;
        let condensed = params.s();
        let walk = WalkExtractor::for_rate(condensed, alpha, (k + params.d()).min(condensed), eps)?;
        let spec = ExtractorSpec::new(
            ell,
            params.d() + walk.spec().d,
            walk.spec().s,
            k,
            eps,
            ExtractorKind::GuvComposed,
        )?;
        Ok(GuvExtractor { spec, params, walk })
    }

    pub fn params(&self) -> &GuvParams {
        &self.params
    }

    pub fn walk(&self) -> &WalkExtractor {
        &self.walk
    }
}

impl Extractor for GuvExtractor {
    fn spec(&self) -> &ExtractorSpec {
        &self.spec
    }

    fn extract(&self, x: &[bool], y: &[bool]) -> Result<Vec<bool>, ExtractorError> {
        self.spec.check_input(x, y)?;
        let (y1, y2) = y.split_at(self.params.d());
        let c = guv_condense(&self.params, x, y1)?;
        self.walk.extract(&c, y2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits_from_u64;
    use crate::field::Field;
    use rand::{Rng, SeedableRng};

    #[test]
    fn frozen_derivation() {
        let p = GuvParams::derive(64, 8, 0.125, 0.25, DEFAULT_MAX_TOWER).unwrap();
        assert_eq!((p.a, p.log_q, p.n, p.log_h, p.m), (2, 100, 1, 87, 1));
        assert_eq!((p.d(), p.s()), (100, 200));
        assert!((p.log_z - libm::log2(12288.0)).abs() < 1e-12);
        p.check().unwrap();
    }

    #[test]
    fn tower_cap_is_reported() {
        assert!(matches!(
            GuvParams::derive(64, 8, 0.125, 0.25, 1),
            Err(ExtractorError::Infeasible(_))
        ));
    }

    #[test]
    fn power_of_three_is_strictly_above() {
        // ell = 20 = log q exactly needs n = 3
        let p = GuvParams::derive(20, 1, 0.9, 0.45, 1).unwrap();
        assert_eq!((p.log_q, p.n), (20, 3));
        p.check().unwrap();
    }

    #[test]
    fn expander_matches_naive_powers() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for (a, b) in [(0, 1), (1, 1), (0, 2)] {
            let ring = PolyRing::new(a, b);
            let fq = *ring.field();
            let w = fq.bits() as u64;
            for log_h in [1usize, 2] {
                for m in 1..=4 {
                    let f: Vec<FqElem> = (0..ring.n()).map(|_| fq.from_u128(rng.gen())).collect();
                    let y = fq.from_u128(rng.gen());
                    let got = guv_expander(&ring, &f, &y, log_h, m).unwrap();
                    assert_eq!(got[0], y);
                    for (i, c) in got[1..].iter().enumerate() {
                        let e = 1u128 << (log_h * i);
                        assert_eq!(
                            *c,
                            ring.eval(&ring.pow(&f, e), &y),
                            "a={a} b={b} i={i} w={w}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn zero_polynomial_gives_zero_coordinates() {
        let ring = PolyRing::new(0, 1);
        let fq = *ring.field();
        let y = fq.from_u128(7);
        let got = guv_expander(&ring, &ring.zero(), &y, 2, 3).unwrap();
        assert_eq!(got[0], y);
        assert!(got[1..].iter().all(|c| fq.is_zero(c)));
    }

    #[test]
    fn condenser_seed_prefix_is_verbatim() {
        let p = GuvParams::derive(64, 8, 0.125, 0.25, DEFAULT_MAX_TOWER).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<bool> = (0..64).map(|_| rng.gen()).collect();
        let y: Vec<bool> = (0..100).map(|_| rng.gen()).collect();
        let out = guv_condense(&p, &x, &y).unwrap();
        assert_eq!(out.len(), 200);
        assert_eq!(out[..100], y[..]);
        assert_eq!(out, guv_condense(&p, &x, &y).unwrap());
        let mut y2 = y.clone();
        y2[17] = !y2[17];
        let out2 = guv_condense(&p, &x, &y2).unwrap();
        let diff: Vec<usize> = (0..100).filter(|&i| out[i] != out2[i]).collect();
        assert_eq!(diff, [17]);
    }

    #[test]
    fn composed_extractor_shape() {
        let e = GuvExtractor::new(64, 8, 0.125, 0.25, DEFAULT_MAX_TOWER).unwrap();
        let spec = *e.spec();
        assert_eq!((spec.d, spec.s), (104, 155));
        assert!(spec.s as f64 >= 0.75 * 8.0);
        assert!(spec.d as f64 <= GUV_SEED_CONSTANT * libm::log2(64.0));
        let x = bits_from_u64(0xdead_beef_0123_4567, 64);
        let y: Vec<bool> = (0..104).map(|i| i % 3 == 0).collect();
        assert_eq!(e.extract(&x, &y).unwrap(), e.extract(&x, &y).unwrap());
    }

    #[test]
    fn condenser_image_is_bounded_by_seed_count() {
        // d = 20 at these settings; n = 1 so f is a constant
        let p = GuvParams::derive(4, 2, 0.5, 0.45, 1).unwrap();
        assert_eq!(p.d(), 20);
        let x = bits_from_u64(0b1011, 4);
        let mut image = alloc::collections::BTreeSet::new();
        for y in (0..1u64 << p.d()).step_by(97) {
            image.insert(guv_condense(&p, &x, &bits_from_u64(y, p.d())).unwrap());
        }
        assert!(image.len() as u64 <= 1 << p.d());
    }

    /// Seed length of the composed extractor, in units of `log2 ell`.
    const GUV_SEED_CONSTANT: f64 = 18.0;
}
