//! Seeded extractors `Ext: {0,1}^ell x {0,1}^d -> {0,1}^s` and the sampler
//! property tester.

mod expander;
mod guv;
mod hash;
pub mod sampler;
mod walk;

pub use expander::Expander;
pub use guv::{guv_condense, guv_expander, GuvExtractor, GuvParams, DEFAULT_MAX_TOWER};
pub use hash::HashExtractor;
pub use walk::WalkExtractor;

use alloc::string::String;
use alloc::vec::Vec;

use crate::field::FieldError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtractorError {
    #[error("invalid extractor spec: {0}")]
    InvalidSpec(&'static str),
    #[error("{what} has length {got}, expected {expected}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("output length {s} outside the leftover-hash regime s <= k - 2 log2(1/eps) (k = {k}, eps = {eps})")]
    Regime { s: usize, k: usize, eps: f64 },
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("enumeration needs {needed} evaluations, cap is {cap}")]
    CapExceeded { needed: u128, cap: u64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtractorKind {
    GuvComposed,
    Walk,
    Hash,
    Custom,
}

/// Shape of a seeded extractor together with the `(k, eps)` it claims.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractorSpec {
    pub ell: usize,
    pub d: usize,
    pub s: usize,
    pub k: usize,
    pub eps: f64,
    pub kind: ExtractorKind,
}

impl ExtractorSpec {
    pub fn new(
        ell: usize,
        d: usize,
        s: usize,
        k: usize,
        eps: f64,
        kind: ExtractorKind,
    ) -> Result<Self, ExtractorError> {
        if d == 0 {
            return Err(ExtractorError::InvalidSpec("seed length must be positive"));
        }
        if s == 0 {
            return Err(ExtractorError::InvalidSpec(
                "output length must be positive",
            ));
        }
        if k > ell {
            return Err(ExtractorError::InvalidSpec("entropy exceeds source length"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(ExtractorError::InvalidSpec("error must lie in (0, 1)"));
        }
        Ok(ExtractorSpec {
            ell,
            d,
            s,
            k,
            eps,
            kind,
        })
    }

    pub(crate) fn check_input(&self, x: &[bool], y: &[bool]) -> Result<(), ExtractorError> {
        if x.len() != self.ell {
            return Err(ExtractorError::Length {
                what: "source",
                expected: self.ell,
                got: x.len(),
            });
        }
        if y.len() != self.d {
            return Err(ExtractorError::Length {
                what: "seed",
                expected: self.d,
                got: y.len(),
            });
        }
        Ok(())
    }
}

/// A pure seeded function. Implementations hold no mutable state.
pub trait Extractor {
    fn spec(&self) -> &ExtractorSpec;
    fn extract(&self, x: &[bool], y: &[bool]) -> Result<Vec<bool>, ExtractorError>;
}

impl<E: Extractor + ?Sized> Extractor for &E {
    fn spec(&self) -> &ExtractorSpec {
        (**self).spec()
    }
    fn extract(&self, x: &[bool], y: &[bool]) -> Result<Vec<bool>, ExtractorError> {
        (**self).extract(x, y)
    }
}

/// `Ext(x, y) = y`; the seed passes through untouched (`d = s`).
#[derive(Debug, Clone)]
pub struct SeedIdentity {
    spec: ExtractorSpec,
}

impl SeedIdentity {
    pub fn new(ell: usize, s: usize, k: usize, eps: f64) -> Result<Self, ExtractorError> {
        Ok(SeedIdentity {
            spec: ExtractorSpec::new(ell, s, s, k, eps, ExtractorKind::Custom)?,
        })
    }
}

impl Extractor for SeedIdentity {
    fn spec(&self) -> &ExtractorSpec {
        &self.spec
    }
    fn extract(&self, x: &[bool], y: &[bool]) -> Result<Vec<bool>, ExtractorError> {
        self.spec.check_input(x, y)?;
        Ok(y.to_vec())
    }
}

/// Wraps an arbitrary function as a custom extractor.
pub struct FnExtractor<F> {
    spec: ExtractorSpec,
    f: F,
}

impl<F: Fn(&[bool], &[bool]) -> Vec<bool>> FnExtractor<F> {
    pub fn new(spec: ExtractorSpec, f: F) -> Self {
        FnExtractor { spec, f }
    }
}

impl<F: Fn(&[bool], &[bool]) -> Vec<bool>> Extractor for FnExtractor<F> {
    fn spec(&self) -> &ExtractorSpec {
        &self.spec
    }
    fn extract(&self, x: &[bool], y: &[bool]) -> Result<Vec<bool>, ExtractorError> {
        self.spec.check_input(x, y)?;
        let out = (self.f)(x, y);
        if out.len() != self.spec.s {
            return Err(ExtractorError::Length {
                what: "output",
                expected: self.spec.s,
                got: out.len(),
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_invariants() {
        assert!(ExtractorSpec::new(4, 0, 1, 1, 0.5, ExtractorKind::Custom).is_err());
        assert!(ExtractorSpec::new(4, 1, 0, 1, 0.5, ExtractorKind::Custom).is_err());
        assert!(ExtractorSpec::new(4, 1, 1, 5, 0.5, ExtractorKind::Custom).is_err());
        assert!(ExtractorSpec::new(4, 1, 1, 1, 1.0, ExtractorKind::Custom).is_err());
        assert!(ExtractorSpec::new(4, 1, 1, 1, 0.0, ExtractorKind::Custom).is_err());
        assert!(ExtractorSpec::new(4, 1, 1, 4, 0.5, ExtractorKind::Custom).is_ok());
    }

    #[test]
    fn identity_checks_lengths() {
        let e = SeedIdentity::new(3, 2, 1, 0.5).unwrap();
        assert_eq!(
            e.extract(&[true; 3], &[true, false]).unwrap(),
            [true, false]
        );
        assert!(e.extract(&[true; 2], &[true, false]).is_err());
        assert!(e.extract(&[true; 3], &[true]).is_err());
    }
}
