use alloc::format;
use alloc::vec::Vec;

use super::{Expander, Extractor, ExtractorError, ExtractorKind, ExtractorSpec};
use crate::bits::bits_to_u64;

/// Expander-walk extractor for high-entropy sources.
///
/// The source is a walk description: a start vertex of `out` bits followed
/// by `2^t - 1` edge labels. The `t`-bit seed picks a step index `i` and the
/// output is the `i`-th vertex of the walk. Source bits past the walk
/// description are ignored.
#[derive(Debug, Clone)]
pub struct WalkExtractor {
    spec: ExtractorSpec,
    expander: Expander,
    steps: usize,
}

impl WalkExtractor {
    pub fn new(
        ell: usize,
        out: usize,
        t: usize,
        k: usize,
        eps: f64,
    ) -> Result<Self, ExtractorError> {
        let spec = ExtractorSpec::new(ell, t, out, k, eps, ExtractorKind::Walk)?;
        if t >= 32 {
            return Err(ExtractorError::Infeasible(format!("walk seed of {t} bits")));
        }
        let expander = Expander::new(out);
        let steps = (1usize << t) - 1;
        let need = out + steps * expander.label_bits();
        if need > ell {
            return Err(ExtractorError::Infeasible(format!(
                "walk description needs {need} bits, source has {ell}"
            )));
        }
        Ok(WalkExtractor {
            spec,
            expander,
            steps,
        })
    }

    /// Largest seed with label bits at most `alpha * ell` and an output that
    /// keeps at least a `1 - alpha` fraction of the source.
    pub fn for_rate(ell: usize, alpha: f64, k: usize, eps: f64) -> Result<Self, ExtractorError> {
        let budget = libm::floor(alpha * ell as f64) as usize;
        let keep = (1.0 - alpha) * ell as f64 - 1e-9;
        for t in (1..32usize).rev() {
            let steps = (1usize << t) - 1;
            if 3 * steps <= budget && ell - 3 * steps > 4 {
                return Self::new(ell, ell - 3 * steps, t, k, eps);
            }
            // complete-graph fallback: labels as wide as vertices
            let out = ell / (steps + 1);
            if (1..=4).contains(&out) && steps * out <= budget && out as f64 >= keep {
                return Self::new(ell, out, t, k, eps);
            }
        }
        Err(ExtractorError::Infeasible(format!(
            "no walk fits rate {alpha} at source length {ell}"
        )))
    }

    pub fn expander(&self) -> &Expander {
        &self.expander
    }

    /// Number of edges in the walk description.
    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl Extractor for WalkExtractor {
    fn spec(&self) -> &ExtractorSpec {
        &self.spec
    }

    fn extract(&self, x: &[bool], y: &[bool]) -> Result<Vec<bool>, ExtractorError> {
        self.spec.check_input(x, y)?;
        let out = self.spec.s;
        let lb = self.expander.label_bits();
        let index = bits_to_u64(y) as usize;
        let mut v = x[..out].to_vec();
        for step in 0..index {
            let at = out + step * lb;
            v = self.expander.neighbor(&v, &x[at..at + lb]);
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits_from_u64;
    use crate::extractors::sampler::{flat_source_family, flat_source_tvd};
    use num_traits::ToPrimitive;

    #[test]
    fn index_zero_is_start_block() {
        let e = WalkExtractor::new(12, 3, 2, 10, 0.15).unwrap();
        for x in [0u64, 0b101_110_011_010, 4095] {
            let xb = bits_from_u64(x, 12);
            assert_eq!(e.extract(&xb, &[false, false]).unwrap(), xb[..3]);
        }
    }

    #[test]
    fn complete_walk_sums_labels() {
        let e = WalkExtractor::new(12, 3, 2, 10, 0.15).unwrap();
        let x = bits_from_u64(0b111_011_010_101, 12);
        let want = [5u64, 5 + 2, 5 + 2 + 3, 5 + 2 + 3 + 7];
        for (i, w) in want.iter().enumerate() {
            let out = e.extract(&x, &bits_from_u64(i as u64, 2)).unwrap();
            assert_eq!(bits_to_u64(&out), w % 8);
        }
    }

    #[test]
    fn rate_selection() {
        let e = WalkExtractor::for_rate(200, 0.25, 8, 0.125).unwrap();
        assert_eq!((e.spec().d, e.steps(), e.spec().s), (4, 15, 155));
        let e = WalkExtractor::for_rate(12, 0.75, 10, 0.15).unwrap();
        assert_eq!((e.spec().d, e.steps(), e.spec().s), (2, 3, 3));
    }

    #[test]
    fn high_entropy_flat_sources_are_close_to_uniform() {
        let e = WalkExtractor::new(12, 3, 2, 10, 0.15).unwrap();
        for support in flat_source_family(12, 10, 5, 0x3a1c) {
            let d = flat_source_tvd(&e, &support).unwrap();
            assert!(d.to_f64().unwrap() <= 0.15, "{d}");
        }
    }
}
