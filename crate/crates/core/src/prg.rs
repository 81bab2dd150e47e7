//! Pseudorandom generators for space-bounded programs: a Nisan-style
//! recursive hashing generator and an extractor-based generator that
//! stretches a short uniform seed.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::bits::ceil_log2;
use crate::bp::{fill_bits, BpError, Program, VertexId};
use crate::distribution::{exact_distribution, tvd, DistError, Prob, VertexDistribution};
use crate::extractors::{Extractor, ExtractorError, HashExtractor};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PrgError {
    #[error("output index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("seed has length {got}, expected {expected}")]
    SeedLength { expected: usize, got: usize },
    #[error("invalid generator parameters: {0}")]
    Invalid(String),
    #[error("enumeration needs {needed} evaluations, cap is {cap}")]
    CapExceeded { needed: u128, cap: u64 },
    #[error(transparent)]
    Extractor(#[from] ExtractorError),
    #[error(transparent)]
    Program(#[from] BpError),
    #[error(transparent)]
    Distribution(#[from] DistError),
}

/// Parameters of the recursive generator.
///
/// Blocks have `w` bits and there are `levels` hash levels, so the output
/// has `w * 2^levels >= T` bits before truncation to `T`. The seed holds the
/// hash descriptions first (`s1 = levels * (3w - 1)` bits: `2w - 1` Toeplitz
/// diagonals then a `w`-bit offset per level) and the base block last
/// (`s2 = w` bits).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NisanParams {
    pub space: usize,
    pub len: usize,
    pub eps: f64,
    pub block: usize,
    pub levels: usize,
}

impl NisanParams {
    /// Block length `min(T, S + ceil(log2(1/eps)))`.
    pub fn new(space: usize, len: usize, eps: f64) -> Result<Self, PrgError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(PrgError::Invalid(format!("error {eps} outside (0, 1)")));
        }
        let block = (space + libm::ceil(libm::log2(1.0 / eps) - 1e-9) as usize).min(len);
        Self::with_block(space, len, eps, block)
    }

    pub fn with_block(space: usize, len: usize, eps: f64, block: usize) -> Result<Self, PrgError> {
        if len == 0 || block == 0 {
            return Err(PrgError::Invalid(String::from(
                "output and block length must be positive",
            )));
        }
        if space < 64 && len as u128 > 1u128 << space {
            return Err(PrgError::Invalid(format!("length {len} exceeds 2^{space}")));
        }
        if block > 64 {
            return Err(PrgError::Invalid(format!("block of {block} bits")));
        }
        let blocks = len.div_ceil(block) as u64;
        Ok(NisanParams {
            space,
            len,
            eps,
            block,
            levels: ceil_log2(blocks) as usize,
        })
    }

    pub fn hash_bits(&self) -> usize {
        3 * self.block - 1
    }

    /// `s1`, bits spent on hash descriptions.
    pub fn s1(&self) -> usize {
        self.levels * self.hash_bits()
    }

    /// `s2`, the base block.
    pub fn s2(&self) -> usize {
        self.block
    }

    pub fn seed_len(&self) -> usize {
        self.s1() + self.s2()
    }

    fn check_seed(&self, seed: &[bool]) -> Result<(), PrgError> {
        if seed.len() != self.seed_len() {
            return Err(PrgError::SeedLength {
                expected: self.seed_len(),
                got: seed.len(),
            });
        }
        Ok(())
    }

    /// Applies hash `t` (1-based) to a block: `A v + b` with `A` Toeplitz,
    /// `A[r][c] = diag[r - c + w - 1]`.
    fn hash(&self, seed: &[bool], t: usize, v: u64) -> u64 {
        let w = self.block;
        let desc = &seed[(t - 1) * self.hash_bits()..t * self.hash_bits()];
        let (diag, offset) = desc.split_at(2 * w - 1);
        let mut out = 0u64;
        for r in 0..w {
            let mut bit = offset[r];
            for c in 0..w {
                bit ^= diag[r + w - 1 - c] & ((v >> c) & 1 == 1);
            }
            out |= (bit as u64) << r;
        }
        out
    }

    fn base(&self, seed: &[bool]) -> u64 {
        seed[self.s1()..]
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &b)| acc | ((b as u64) << k))
    }
}

/// Bit `i` of the generator output, without materializing the rest.
pub fn nisan_bit(seed: &[bool], i: usize, p: &NisanParams) -> Result<bool, PrgError> {
    p.check_seed(seed)?;
    if i >= p.len {
        return Err(PrgError::IndexOutOfRange {
            index: i,
            len: p.len,
        });
    }
    let block = i / p.block;
    let mut v = p.base(seed);
    // G_t = G_{t-1}(x) . G_{t-1}(h_t(x)): the top level decides first
    for t in (1..=p.levels).rev() {
        if (block >> (t - 1)) & 1 == 1 {
            v = p.hash(seed, t, v);
        }
    }
    Ok((v >> (i % p.block)) & 1 == 1)
}

/// The full output, materialized from the recursion
/// `G_t(x) = G_{t-1}(x) . G_{t-1}(h_t(x))`.
pub fn nisan_output(seed: &[bool], p: &NisanParams) -> Result<Vec<bool>, PrgError> {
    p.check_seed(seed)?;
    let mut out: Vec<bool> = expand(seed, p, p.base(seed), p.levels)
        .iter()
        .flat_map(|&v| (0..p.block).map(move |k| (v >> k) & 1 == 1))
        .collect();
    out.truncate(p.len);
    Ok(out)
}

/// Blocks of `G_t` on base block `x`.
fn expand(seed: &[bool], p: &NisanParams, x: u64, t: usize) -> Vec<u64> {
    if t == 0 {
        return vec![x];
    }
    let mut left = expand(seed, p, x, t - 1);
    left.extend(expand(seed, p, p.hash(seed, t, x), t - 1));
    left
}

/// Exact distance between the end vertex under generator output and under
/// truly uniform randomness. `generate` maps a seed of `seed_len` bits to at
/// least `m` bits.
pub fn generator_fooling_tvd<W: Prob>(
    program: &Program,
    v0: VertexId,
    x: &[bool],
    seed_len: usize,
    cap: u64,
    mut generate: impl FnMut(&[bool]) -> Result<Vec<bool>, PrgError>,
) -> Result<W, PrgError> {
    if seed_len >= 64 || 1u128 << seed_len > cap as u128 {
        return Err(PrgError::CapExceeded {
            needed: 1u128 << seed_len.min(127),
            cap,
        });
    }
    let m = program.m();
    let mut counts = vec![0u64; program.size()];
    let mut seed = vec![false; seed_len];
    let total = 1u64 << seed_len;
    for z in 0..total {
        fill_bits(&mut seed, z);
        let y = generate(&seed)?;
        if y.len() < m {
            return Err(PrgError::Invalid(format!(
                "generator gives {} bits, program reads {m}",
                y.len()
            )));
        }
        counts[program.eval(v0, x, &y[..m])?] += 1;
    }
    let fooled = VertexDistribution::from_vec(
        counts
            .into_iter()
            .map(|c| W::from_ratio(c, total))
            .collect(),
    );
    let truth = exact_distribution(program, v0, x, cap)?;
    Ok(tvd(&fooled, &truth)?)
}

pub fn nisan_fooling_tvd<W: Prob>(
    program: &Program,
    v0: VertexId,
    x: &[bool],
    p: &NisanParams,
    cap: u64,
) -> Result<W, PrgError> {
    generator_fooling_tvd(program, v0, x, p.seed_len(), cap, |s| nisan_output(s, p))
}

/// Extractor-based stretching: the seed is a source block `x0` followed by
/// `t` extractor seeds, and the output is `Ext(x0, y_1) ... Ext(x0, y_t)`
/// truncated.
#[derive(Debug, Clone)]
pub struct NzParams {
    pub source_len: usize,
    pub call_seed: usize,
    pub out_per_call: usize,
    pub calls: usize,
    pub target_len: usize,
    ext: HashExtractor,
}

impl NzParams {
    /// The source block is uniform, so the extractor runs at `k = source_len`.
    pub fn new(
        source_len: usize,
        call_seed: usize,
        out_per_call: usize,
        calls: usize,
        eps: f64,
        target_len: usize,
    ) -> Result<Self, PrgError> {
        if calls == 0 {
            return Err(PrgError::Invalid(String::from(
                "at least one extractor call",
            )));
        }
        if calls * out_per_call < target_len {
            return Err(PrgError::Invalid(format!(
                "{calls} calls of {out_per_call} bits cannot cover {target_len}"
            )));
        }
        let ext = HashExtractor::new(source_len, call_seed, out_per_call, source_len, eps)?;
        Ok(NzParams {
            source_len,
            call_seed,
            out_per_call,
            calls,
            target_len,
            ext,
        })
    }

    pub fn seed_len(&self) -> usize {
        self.source_len + self.calls * self.call_seed
    }

    pub fn extractor(&self) -> &HashExtractor {
        &self.ext
    }
}

pub fn nz_generate(seed: &[bool], p: &NzParams) -> Result<Vec<bool>, PrgError> {
    if seed.len() != p.seed_len() {
        return Err(PrgError::SeedLength {
            expected: p.seed_len(),
            got: seed.len(),
        });
    }
    let (x0, ys) = seed.split_at(p.source_len);
    let mut out = Vec::with_capacity(p.calls * p.out_per_call);
    for y in ys.chunks(p.call_seed) {
        out.extend(p.ext.extract(x0, y)?);
    }
    out.truncate(p.target_len);
    Ok(out)
}
