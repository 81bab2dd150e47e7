//! Exhaustive extractor checks: flat-source distance and the sampler
//! bad-set count.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Extractor, ExtractorError};
use crate::bits::{bits_from_u64, bits_to_u64};

/// Seed of the frozen flat-source family used by the regression checks.
pub const FROZEN_FAMILY_SEED: u64 = 0x5eed_f1a7;

/// Largest output length for which a histogram over `{0,1}^s` is built.
pub const MAX_OUTPUT_BITS: usize = 20;

fn check_cap(needed: u128, cap: u64) -> Result<(), ExtractorError> {
    if needed > cap as u128 {
        return Err(ExtractorError::CapExceeded { needed, cap });
    }
    Ok(())
}

fn output_bits_ok(s: usize) -> Result<(), ExtractorError> {
    if s > MAX_OUTPUT_BITS {
        return Err(ExtractorError::CapExceeded {
            needed: 1u128 << s,
            cap: 1 << MAX_OUTPUT_BITS,
        });
    }
    Ok(())
}

/// `count` supports of size `2^k` in `{0,1}^ell`, each drawn uniformly
/// without replacement from a ChaCha8 stream keyed by `seed`. Sorted.
pub fn flat_source_family(ell: usize, k: usize, count: usize, seed: u64) -> Vec<Vec<u64>> {
    assert!(k <= ell && ell <= 30, "flat sources need k <= ell <= 30");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut s: Vec<u64> = sample(&mut rng, 1usize << ell, 1usize << k)
                .into_iter()
                .map(|x| x as u64)
                .collect();
            s.sort_unstable();
            s
        })
        .collect()
}

/// Histogram of `Ext(x, y)` over all seeds `y`, outputs as little-endian
/// integers.
pub fn seed_histogram<E: Extractor>(ext: &E, x: &[bool]) -> Result<Vec<u64>, ExtractorError> {
    let spec = ext.spec();
    output_bits_ok(spec.s)?;
    if spec.d >= 64 {
        return Err(ExtractorError::CapExceeded {
            needed: 1u128 << spec.d.min(127),
            cap: u64::MAX,
        });
    }
    let mut hist = vec![0u64; 1 << spec.s];
    for y in 0..1u64 << spec.d {
        let out = ext.extract(x, &bits_from_u64(y, spec.d))?;
        hist[bits_to_u64(&out) as usize] += 1;
    }
    Ok(hist)
}

/// Exact distance between `Ext(X, U_d)` and `U_s` for `X` uniform on `support`.
pub fn flat_source_tvd<E: Extractor>(
    ext: &E,
    support: &[u64],
) -> Result<BigRational, ExtractorError> {
    let spec = ext.spec();
    output_bits_ok(spec.s)?;
    check_cap(
        (support.len() as u128) << spec.d,
        crate::bp::DEFAULT_ENUMERATION_CAP,
    )?;
    let mut hist = vec![0u64; 1 << spec.s];
    for &x in support {
        for (o, c) in seed_histogram(ext, &bits_from_u64(x, spec.ell))?
            .iter()
            .enumerate()
        {
            hist[o] += c;
        }
    }
    // each outcome has mass hist[o] / (|X| 2^d) against 2^-s
    let total = (support.len() as i128) << spec.d;
    let l1: i128 = hist
        .iter()
        .map(|&c| ((c as i128) << spec.s) - total)
        .map(i128::abs)
        .sum();
    Ok(BigRational::new(
        BigInt::from(l1),
        BigInt::from(2 * total) << spec.s,
    ))
}

/// Outcome of checking an extractor against a family of flat sources.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub max_tvd: BigRational,
    pub verified: bool,
}

/// Checks `tvd <= eps` on every support in the family.
pub fn verify_extractor<E: Extractor>(
    ext: &E,
    family: &[Vec<u64>],
    eps: &BigRational,
) -> Result<Verification, ExtractorError> {
    let mut max_tvd = BigRational::from_integer(BigInt::from(0));
    for support in family {
        let d = flat_source_tvd(ext, support)?;
        if d > max_tvd {
            max_tvd = d;
        }
    }
    Ok(Verification {
        verified: max_tvd <= *eps,
        max_tvd,
    })
}

/// Number of sources `x` for which `f(Ext(x, U_d))` is more than `delta`
/// away from `f(U_s)` in total variation. `f` is a table over `{0,1}^s`
/// with values below `values`.
pub fn sampler_badset_count<E: Extractor>(
    ext: &E,
    f: &[usize],
    values: usize,
    delta: Ratio<u64>,
    cap: u64,
) -> Result<u64, ExtractorError> {
    let spec = ext.spec();
    output_bits_ok(spec.s)?;
    if f.len() != 1 << spec.s {
        return Err(ExtractorError::Length {
            what: "function table",
            expected: 1 << spec.s,
            got: f.len(),
        });
    }
    if f.iter().any(|&v| v >= values) {
        return Err(ExtractorError::InvalidSpec("function value out of range"));
    }
    if spec.ell >= 64 || spec.d >= 64 {
        return Err(ExtractorError::CapExceeded {
            needed: u128::MAX,
            cap,
        });
    }
    check_cap(1u128 << (spec.ell + spec.d), cap)?;
    let mut uniform = vec![0i128; values];
    for &v in f {
        uniform[v] += 1;
    }
    let mut bad = 0;
    for x in 0..1u64 << spec.ell {
        let hist = seed_histogram(ext, &bits_from_u64(x, spec.ell))?;
        let mut extracted = vec![0i128; values];
        for (o, &c) in hist.iter().enumerate() {
            extracted[f[o]] += c as i128;
        }
        // sum_v |c_v 2^s - e_v 2^d| / 2^(s+d) > 2 delta
        let l1: i128 = extracted
            .iter()
            .zip(&uniform)
            .map(|(&c, &e)| ((c << spec.s) - (e << spec.d)).abs())
            .sum();
        let lhs = l1 * *delta.denom() as i128;
        let rhs = (2 * *delta.numer() as i128) << (spec.s + spec.d);
        if lhs > rhs {
            bad += 1;
        }
    }
    Ok(bad)
}
