//! Simulating a randomized program with its own input as the randomness
//! source.
//!
//! The input positions are split into blocks. Each phase picks a block,
//! extracts a generator seed from the input bits in that block, expands it
//! and walks the program restricted to reads outside the block until it
//! stops. Hybrids H1, H2 and H3 replace, in turn, the extracted seed by a
//! uniform one, the generator output by uniform bits, and the fixed number
//! of phases by "run until a terminal".
//!
//! Walks run on the fresh-read form of the program, so a walk can be cut at
//! any vertex and resumed with new randomness without changing its law.
//! States are vertices of that form; results are mapped back to the
//! original vertex ids.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::bits::{bits_from_u64, ceil_log2, BitStream, StreamExhausted};
use crate::bp::{AccessDiscipline, BpError, FreshReadForm, Program, VertexId};
use crate::distribution::{
    absorbing_distribution, exact_distribution, one_way_walk_distribution, uniform_below,
    DistError, Prob, StochasticMatrix, VertexDistribution,
};
use crate::extractors::{Extractor, ExtractorError, HashExtractor};
use crate::prg::{nisan_output, NisanParams, PrgError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("program does not satisfy the {0:?} access discipline")]
    Discipline(AccessDiscipline),
    #[error("length bound T = {t} is below the program length {length}")]
    LengthBound { t: usize, length: usize },
    #[error("length bound T = {t} is below the random tape length {m}")]
    TapeBound { t: usize, m: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("only {blocks} blocks; the phase count needs more than 8 or an explicit override")]
    TooFewBlocks { blocks: usize },
    #[error("extractor {what} is {got}, the plan needs {expected}")]
    ExtractorMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("no terminal reached after {phases} phases")]
    NotAbsorbed { phases: usize },
    #[error("enumeration needs {needed} evaluations, cap is {cap}")]
    CapExceeded { needed: u128, cap: u64 },
    #[error(transparent)]
    Stream(#[from] StreamExhausted),
    #[error(transparent)]
    Extractor(#[from] ExtractorError),
    #[error(transparent)]
    Prg(#[from] PrgError),
    #[error(transparent)]
    Distribution(#[from] DistError),
    #[error(transparent)]
    Program(#[from] BpError),
}

/// Which simulation: random input access (blocks chosen at random) or
/// sequential input access (block determined by the head position).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    RandomAccess,
    Sequential,
}

impl Mode {
    pub fn discipline(self) -> AccessDiscipline {
        match self {
            Mode::RandomAccess => AccessDiscipline::ROw,
            Mode::Sequential => AccessDiscipline::SOw,
        }
    }
}

/// The algorithm and its hybrids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Extracted seed, generator output.
    A,
    /// Uniform seed, generator output.
    H1,
    /// Uniform tape.
    H2,
    /// Uniform tape, phases until a terminal.
    H3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Mistake-rate exponent constant, at least 1.
    pub c: u32,
    /// Declared length bound.
    pub t: usize,
    /// Generator block length; derived from the space bound when absent.
    pub prg_block: Option<usize>,
    pub r_override: Option<usize>,
    pub block_size_override: Option<usize>,
    pub threshold_override: Option<usize>,
    /// H3 stops with an error after this many multiples of `r` phases.
    pub h3_cap_factor: usize,
    pub trials: u64,
    pub master_seed: u64,
}

impl SimulationConfig {
    pub fn new(c: u32, t: usize) -> Self {
        SimulationConfig {
            c,
            t,
            prg_block: None,
            r_override: None,
            block_size_override: None,
            threshold_override: None,
            h3_cap_factor: 64,
            trials: 10_000,
            master_seed: 0,
        }
    }

    fn check(&self) -> Result<(), SimError> {
        if self.c == 0 {
            return Err(SimError::Config("c must be at least 1".into()));
        }
        if self.h3_cap_factor == 0 {
            return Err(SimError::Config("h3_cap_factor must be positive".into()));
        }
        for (name, v) in [
            ("prg_block", self.prg_block),
            ("r_override", self.r_override),
            ("block_size_override", self.block_size_override),
            ("threshold_override", self.threshold_override),
        ] {
            if v == Some(0) {
                return Err(SimError::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Resolved parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub mode: Mode,
    pub n: usize,
    pub t: usize,
    /// `max(ceil(log2 size(P)), ceil(log2 n))`.
    pub space: usize,
    /// `S^(c+1)`, saturating.
    pub nominal_block: u64,
    pub threshold: usize,
    /// `None` selects direct simulation.
    pub plan: Option<PhasePlan>,
}

impl Parameters {
    pub fn is_direct(&self) -> bool {
        self.plan.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlan {
    /// `S^(c+1)` or its override for random access, `h` for sequential.
    pub block_size: usize,
    pub blocks: Vec<Range<usize>>,
    /// Input positions the extractor reads in each block's phase; the walk
    /// stops on reading any of them.
    pub sources: Vec<Vec<usize>>,
    pub r: usize,
    pub eps: f64,
    pub log2_eps: f64,
    pub eps_prime: f64,
    pub log2_eps_prime: f64,
    /// Entropy the extractor is asked to handle.
    pub k: f64,
    pub nisan: NisanParams,
}

impl PhasePlan {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn source_len(&self) -> usize {
        self.sources.first().map_or(0, Vec::len)
    }
}

fn space_bound(p: &Program) -> usize {
    ceil_log2(p.size() as u64).max(ceil_log2(p.n() as u64)) as usize
}

fn saturating_pow(base: usize, exp: u32) -> u64 {
    (base as u64).checked_pow(exp).unwrap_or(u64::MAX)
}

fn isqrt(n: usize) -> usize {
    let mut r = libm::sqrt(n as f64) as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Resolves the phase count, block layout, error targets and generator.
pub fn derive_parameters(
    p: &Program,
    mode: Mode,
    cfg: &SimulationConfig,
) -> Result<Parameters, SimError> {
    cfg.check()?;
    let n = p.n();
    let space = space_bound(p);
    let nominal_block = saturating_pow(space, cfg.c + 1);
    let threshold = cfg.threshold_override.unwrap_or(match mode {
        Mode::RandomAccess => n / 9,
        Mode::Sequential => isqrt(n),
    });
    let mut params = Parameters {
        mode,
        n,
        t: cfg.t,
        space,
        nominal_block,
        threshold,
        plan: None,
    };
    let block_size = match mode {
        Mode::RandomAccess => cfg.block_size_override.map_or(nominal_block, |b| b as u64),
        Mode::Sequential => nominal_block,
    };
    if block_size > threshold as u64 {
        return Ok(params);
    }
    params.plan = Some(match mode {
        Mode::RandomAccess => random_access_plan(space, n, block_size as usize, cfg)?,
        Mode::Sequential => sequential_plan(space, n, nominal_block, cfg)?,
    });
    Ok(params)
}

fn random_access_plan(
    space: usize,
    n: usize,
    size: usize,
    cfg: &SimulationConfig,
) -> Result<PhasePlan, SimError> {
    let count = n / size;
    if count == 0 {
        return Err(SimError::Config(format!(
            "block size {size} exceeds n = {n}"
        )));
    }
    let blocks: Vec<Range<usize>> = (0..count).map(|b| b * size..(b + 1) * size).collect();
    let sources = blocks.iter().map(|r| r.clone().collect()).collect();
    let floor_r = 8 * (cfg.c as usize * space + 1);
    let r = match cfg.r_override {
        Some(r) => r,
        None if count <= 8 => return Err(SimError::TooFewBlocks { blocks: count }),
        None => (8 * cfg.t).div_ceil(count - 8).max(floor_r),
    };
    let decay = cfg.c as f64 * space as f64 * core::f64::consts::LOG2_E;
    let log2_eps = -decay - libm::log2(4.0 * r as f64);
    let log2_eps_prime = -decay - libm::log2(2.0 * r as f64) - space as f64;
    finish_plan(
        space,
        size,
        blocks,
        sources,
        r,
        log2_eps,
        log2_eps_prime,
        None,
        cfg,
    )
}

fn sequential_plan(
    space: usize,
    n: usize,
    nominal: u64,
    cfg: &SimulationConfig,
) -> Result<PhasePlan, SimError> {
    let h = match cfg.block_size_override {
        Some(h) => h,
        None => (n as u64 / nominal.saturating_mul(3)) as usize,
    };
    if h == 0 || 3 * h >= n {
        return Err(SimError::Config(format!(
            "block size h = {h} needs 1 <= h and 3h < n = {n}"
        )));
    }
    let count = n.div_ceil(h);
    let blocks: Vec<Range<usize>> = (0..count).map(|b| b * h..((b + 1) * h).min(n)).collect();
    let keep = n - 3 * h;
    let sources = (0..count)
        .map(|b| {
            let near = b.saturating_sub(1) * h..((b + 2) * h).min(n);
            (0..n).filter(|i| !near.contains(i)).take(keep).collect()
        })
        .collect();
    let r = cfg.r_override.unwrap_or(cfg.t.div_ceil(h).max(1));
    let decay = cfg.c as f64 * space as f64 * core::f64::consts::LOG2_E;
    let log2_eps = -decay - libm::log2(4.0 * r as f64);
    let log2_eps_prime = -decay - libm::log2(r as f64) - space as f64;
    let k = libm::sqrt(n as f64);
    finish_plan(
        space,
        h,
        blocks,
        sources,
        r,
        log2_eps,
        log2_eps_prime,
        Some(k),
        cfg,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish_plan(
    space: usize,
    block_size: usize,
    blocks: Vec<Range<usize>>,
    sources: Vec<Vec<usize>>,
    r: usize,
    log2_eps: f64,
    log2_eps_prime: f64,
    k: Option<f64>,
    cfg: &SimulationConfig,
) -> Result<PhasePlan, SimError> {
    let eps = libm::exp2(log2_eps);
    // tiny targets still need a positive value for the generator
    let gen_eps = eps.max(f64::MIN_POSITIVE);
    let nisan = match cfg.prg_block {
        Some(w) => NisanParams::with_block(space, cfg.t, gen_eps, w)?,
        None => NisanParams::new(space, cfg.t, gen_eps)?,
    };
    let k = k.unwrap_or_else(|| {
        let s = nisan.seed_len() as f64;
        let l = libm::log2(block_size as f64);
        (s * s * s)
            .max(libm::pow(l, 6.0))
            .max(libm::pow(-log2_eps, 6.0))
    });
    Ok(PhasePlan {
        block_size,
        blocks,
        sources,
        r,
        eps,
        log2_eps,
        eps_prime: libm::exp2(log2_eps_prime),
        log2_eps_prime,
        k,
        nisan,
    })
}

/// Hashing extractor matching a plan: source and seed of one block's
/// length, output of the generator's seed length, full min-entropy.
pub fn default_extractor(plan: &PhasePlan) -> Result<HashExtractor, SimError> {
    let ell = plan.source_len();
    let s = plan.nisan.seed_len();
    if ell <= s {
        return Err(SimError::Config(format!(
            "block of {ell} bits cannot yield a {s}-bit generator seed"
        )));
    }
    let eps = libm::exp2(-((ell - s) as f64) / 2.0);
    Ok(HashExtractor::new(ell, ell, s, ell, eps)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseHalt {
    /// Stopped before reading an input position of the current block.
    RestrictedRead,
    /// Reached a terminal.
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseRecord {
    pub block: usize,
    /// Stream bits drawn for the seed or tape (not counting the block draw).
    pub seed_bits: usize,
    pub steps: usize,
    pub halt: PhaseHalt,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhaseTrace {
    /// Phases in which a walk ran. Phases after a terminal only burn bits.
    pub phases: Vec<PhaseRecord>,
    /// Whether the run ended at a terminal. `false` means the phase budget
    /// was exhausted first.
    pub absorbed: bool,
    /// Stream bits consumed by the run.
    pub bits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub vertex: VertexId,
    pub trace: PhaseTrace,
}

/// A program prepared for simulation.
pub struct Simulator<'a, E: Extractor + ?Sized> {
    program: &'a Program,
    fresh: FreshReadForm,
    params: Parameters,
    ext: &'a E,
    cfg: SimulationConfig,
    /// `restricted[b][i]`: position `i` belongs to block `b`'s source.
    restricted: Vec<Vec<bool>>,
}

impl<'a, E: Extractor + ?Sized> Simulator<'a, E> {
    pub fn new(
        program: &'a Program,
        mode: Mode,
        cfg: SimulationConfig,
        ext: &'a E,
    ) -> Result<Self, SimError> {
        let params = derive_parameters(program, mode, &cfg)?;
        Self::with_parameters(program, params, cfg, ext)
    }

    /// Uses `params` as given, for callers that adjusted a derived plan.
    pub fn with_parameters(
        program: &'a Program,
        params: Parameters,
        cfg: SimulationConfig,
        ext: &'a E,
    ) -> Result<Self, SimError> {
        let mode = params.mode;
        if !program.validate_discipline(mode.discipline()) {
            return Err(SimError::Discipline(mode.discipline()));
        }
        if cfg.t < program.length() {
            return Err(SimError::LengthBound {
                t: cfg.t,
                length: program.length(),
            });
        }
        if cfg.t < program.m() {
            return Err(SimError::TapeBound {
                t: cfg.t,
                m: program.m(),
            });
        }
        let mut restricted = Vec::new();
        if let Some(plan) = &params.plan {
            let spec = ext.spec();
            if spec.ell != plan.source_len() {
                return Err(SimError::ExtractorMismatch {
                    what: "source length",
                    expected: plan.source_len(),
                    got: spec.ell,
                });
            }
            if spec.s != plan.nisan.seed_len() {
                return Err(SimError::ExtractorMismatch {
                    what: "output length",
                    expected: plan.nisan.seed_len(),
                    got: spec.s,
                });
            }
            for src in &plan.sources {
                let mut mask = vec![false; program.n()];
                for &i in src {
                    mask[i] = true;
                }
                restricted.push(mask);
            }
        }
        Ok(Simulator {
            program,
            fresh: program.fresh_read_form(),
            params,
            ext,
            cfg,
            restricted,
        })
    }

    pub fn parameters(&self) -> &Parameters {
        &self.params
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.cfg
    }

    pub fn program(&self) -> &Program {
        self.program
    }

    /// Stream bits per phase on the phase branch when every block draw
    /// succeeds at once (always, for a power-of-two block count).
    pub fn bits_per_phase(&self, variant: Variant) -> Option<usize> {
        let plan = self.params.plan.as_ref()?;
        let block = match self.params.mode {
            Mode::RandomAccess => ceil_log2(plan.num_blocks() as u64) as usize,
            Mode::Sequential => 0,
        };
        Some(block + self.seed_bits(plan, variant))
    }

    fn seed_bits(&self, plan: &PhasePlan, variant: Variant) -> usize {
        match variant {
            Variant::A => self.ext.spec().d,
            Variant::H1 => plan.nisan.seed_len(),
            Variant::H2 | Variant::H3 => self.cfg.t,
        }
    }

    pub fn simulate_a<S: BitStream + ?Sized>(
        &self,
        v0: VertexId,
        x: &[bool],
        stream: &mut S,
    ) -> Result<Outcome, SimError> {
        self.run(Variant::A, v0, x, stream)
    }

    pub fn hybrid_h1<S: BitStream + ?Sized>(
        &self,
        v0: VertexId,
        x: &[bool],
        stream: &mut S,
    ) -> Result<Outcome, SimError> {
        self.run(Variant::H1, v0, x, stream)
    }

    pub fn hybrid_h2<S: BitStream + ?Sized>(
        &self,
        v0: VertexId,
        x: &[bool],
        stream: &mut S,
    ) -> Result<Outcome, SimError> {
        self.run(Variant::H2, v0, x, stream)
    }

    pub fn hybrid_h3<S: BitStream + ?Sized>(
        &self,
        v0: VertexId,
        x: &[bool],
        stream: &mut S,
    ) -> Result<Outcome, SimError> {
        self.run(Variant::H3, v0, x, stream)
    }

    fn check_start(&self, v0: VertexId, x: &[bool]) -> Result<(), SimError> {
        if v0 >= self.program.size() {
            return Err(BpError::UnknownVertex(v0).into());
        }
        if x.len() != self.program.n() {
            return Err(BpError::Dimension {
                what: "input",
                expected: self.program.n(),
                got: x.len(),
            }
            .into());
        }
        Ok(())
    }

    /// Block whose phase starts at `u` (a nonterminal of the fresh form).
    fn block_at<S: BitStream + ?Sized>(
        &self,
        plan: &PhasePlan,
        u: VertexId,
        stream: &mut S,
    ) -> Result<usize, SimError> {
        Ok(match self.params.mode {
            Mode::RandomAccess => uniform_below(stream, plan.num_blocks() as u64)? as usize,
            Mode::Sequential => {
                let (i, _) = self.fresh.program.vertex(u).indices().expect("nonterminal");
                i / plan.block_size
            }
        })
    }

    fn source_bits(&self, plan: &PhasePlan, b: usize, x: &[bool]) -> Vec<bool> {
        plan.sources[b].iter().map(|&i| x[i]).collect()
    }

    /// Runs one variant on `stream`.
    pub fn run<S: BitStream + ?Sized>(
        &self,
        variant: Variant,
        v0: VertexId,
        x: &[bool],
        stream: &mut S,
    ) -> Result<Outcome, SimError> {
        self.check_start(v0, x)?;
        let start_bits = stream.consumed();
        let mut trace = PhaseTrace::default();
        if self.program.is_terminal(v0) {
            trace.absorbed = true;
            return Ok(Outcome { vertex: v0, trace });
        }
        let Some(plan) = &self.params.plan else {
            let y = stream.take_bits(self.cfg.t)?;
            let vertex = self.program.walk(v0, x, |j| y[j], |_| true).end;
            trace.absorbed = true;
            trace.bits = stream.consumed() - start_bits;
            return Ok(Outcome { vertex, trace });
        };
        let fresh = &self.fresh.program;
        let seed_bits = self.seed_bits(plan, variant);
        let limit = match variant {
            Variant::H3 => plan.r.saturating_mul(self.cfg.h3_cap_factor),
            _ => plan.r,
        };
        let mut u = self.fresh.embed[v0];
        for _ in 0..limit {
            let done = fresh.is_terminal(u);
            if done && variant == Variant::H3 {
                break;
            }
            if done {
                // keep the bit count independent of when the walk stopped
                if self.params.mode == Mode::RandomAccess {
                    uniform_below(stream, plan.num_blocks() as u64)?;
                }
                stream.take_bits(seed_bits)?;
                continue;
            }
            let b = self.block_at(plan, u, stream)?;
            let drawn = stream.take_bits(seed_bits)?;
            let tape = match variant {
                Variant::A => {
                    let seed = self.ext.extract(&self.source_bits(plan, b, x), &drawn)?;
                    nisan_output(&seed, &plan.nisan)?
                }
                Variant::H1 => nisan_output(&drawn, &plan.nisan)?,
                Variant::H2 | Variant::H3 => drawn,
            };
            let mask = &self.restricted[b];
            let w = fresh.walk(u, x, |j| tape[j], |i| !mask[i]);
            if w.steps > self.cfg.t {
                return Err(SimError::LengthBound {
                    t: self.cfg.t,
                    length: w.steps,
                });
            }
            trace.phases.push(PhaseRecord {
                block: b,
                seed_bits,
                steps: w.steps,
                halt: if fresh.is_terminal(w.end) {
                    PhaseHalt::Terminal
                } else {
                    PhaseHalt::RestrictedRead
                },
            });
            u = w.end;
        }
        trace.absorbed = fresh.is_terminal(u);
        if variant == Variant::H3 && !trace.absorbed {
            return Err(SimError::NotAbsorbed { phases: limit });
        }
        trace.bits = stream.consumed() - start_bits;
        Ok(Outcome {
            vertex: self.fresh.origin[u],
            trace,
        })
    }

    /// One-phase transition matrix over the fresh-read form.
    pub fn phase_matrix<W: Prob>(
        &self,
        variant: Variant,
        x: &[bool],
        cap: u64,
    ) -> Result<StochasticMatrix<W>, SimError> {
        let plan = self
            .params
            .plan
            .as_ref()
            .ok_or_else(|| SimError::Config("direct simulation has no phases".into()))?;
        if x.len() != self.program.n() {
            return Err(BpError::Dimension {
                what: "input",
                expected: self.program.n(),
                got: x.len(),
            }
            .into());
        }
        let fresh = &self.fresh.program;
        let dim = fresh.size();
        let blocks = plan.num_blocks();
        // blocks a phase from `u` can use, with equal weight
        let choices = |u: VertexId| -> Range<usize> {
            match (self.params.mode, fresh.vertex(u).indices()) {
                (Mode::Sequential, Some((i, _))) => {
                    let b = i / plan.block_size;
                    b..b + 1
                }
                (Mode::Sequential, None) => 0..1,
                (Mode::RandomAccess, _) => 0..blocks,
            }
        };
        let weight = match self.params.mode {
            Mode::RandomAccess => blocks as u64,
            Mode::Sequential => 1,
        };
        match variant {
            Variant::H2 | Variant::H3 => {
                let share = W::from_ratio(1, weight);
                let mut rows = Vec::with_capacity(dim);
                for u in 0..dim {
                    let mut row = vec![W::zero(); dim];
                    for b in choices(u) {
                        let mask = &self.restricted[b];
                        let d: VertexDistribution<W> =
                            one_way_walk_distribution(fresh, u, x, |i| !mask[i]);
                        for (v, p) in d.support() {
                            row[v].add_in(&p.times(&share));
                        }
                    }
                    rows.push(row);
                }
                Ok(StochasticMatrix::from_rows(rows)?)
            }
            Variant::A | Variant::H1 => {
                let (tapes, total) = self.tape_histograms(plan, variant, x, cap)?;
                let den = total.checked_mul(weight).ok_or(SimError::CapExceeded {
                    needed: total as u128 * weight as u128,
                    cap,
                })?;
                let mut rows = Vec::with_capacity(dim);
                for u in 0..dim {
                    let mut counts = vec![0u64; dim];
                    for b in choices(u) {
                        let mask = &self.restricted[b];
                        let hist = &tapes[if tapes.len() == 1 { 0 } else { b }];
                        for (tape, &c) in hist {
                            counts[fresh.walk(u, x, |j| tape[j], |i| !mask[i]).end] += c;
                        }
                    }
                    rows.push(counts.into_iter().map(|c| W::from_ratio(c, den)).collect());
                }
                Ok(StochasticMatrix::from_rows(rows)?)
            }
        }
    }

    /// Generator tapes with multiplicities, per block for A and shared for
    /// H1, plus the number of seeds behind each histogram.
    #[allow(clippy::type_complexity)]
    fn tape_histograms(
        &self,
        plan: &PhasePlan,
        variant: Variant,
        x: &[bool],
        cap: u64,
    ) -> Result<(Vec<BTreeMap<Vec<bool>, u64>>, u64), SimError> {
        let (seed_len, hists) = match variant {
            Variant::A => (self.ext.spec().d, plan.num_blocks()),
            _ => (plan.nisan.seed_len(), 1),
        };
        let too_many = |needed: u128| SimError::CapExceeded { needed, cap };
        if seed_len >= 64 {
            return Err(too_many(u128::MAX));
        }
        let needed = (hists as u128) << seed_len;
        if needed > cap as u128 {
            return Err(too_many(needed));
        }
        let total = 1u64 << seed_len;
        let mut out = Vec::with_capacity(hists);
        for b in 0..hists {
            let src = self.source_bits(plan, b, x);
            let mut hist = BTreeMap::new();
            for y in 0..total {
                let y = bits_from_u64(y, seed_len);
                let seed = match variant {
                    Variant::A => self.ext.extract(&src, &y)?,
                    _ => y,
                };
                *hist.entry(nisan_output(&seed, &plan.nisan)?).or_insert(0) += 1;
            }
            out.push(hist);
        }
        Ok((out, total))
    }

    /// Exact output law of a variant, over the original vertex ids.
    ///
    /// `cap` bounds the number of generator evaluations for A and H1.
    pub fn exact_law<W: Prob>(
        &self,
        variant: Variant,
        v0: VertexId,
        x: &[bool],
        cap: u64,
    ) -> Result<VertexDistribution<W>, SimError> {
        self.check_start(v0, x)?;
        let Some(plan) = &self.params.plan else {
            return Ok(exact_distribution(self.program, v0, x, cap)?);
        };
        let fresh = &self.fresh.program;
        let size = self.program.size();
        let start = self.fresh.embed[v0];
        if fresh.is_terminal(start) {
            return Ok(VertexDistribution::point(size, v0));
        }
        let m = self.phase_matrix::<W>(variant, x, cap)?;
        let law = if variant == Variant::H3 {
            let terminal: Vec<bool> = (0..fresh.size()).map(|u| fresh.is_terminal(u)).collect();
            absorbing_distribution(&m, start, &terminal)?
        } else {
            let mut d = VertexDistribution::point(fresh.size(), start);
            for _ in 0..plan.r {
                d = m.apply(&d)?;
            }
            d
        };
        Ok(law.project(size, &self.fresh.origin))
    }
}

/// One run of the random-access algorithm with a fresh simulator.
pub fn simulate_a<E: Extractor + ?Sized, S: BitStream + ?Sized>(
    p: &Program,
    v0: VertexId,
    x: &[bool],
    cfg: &SimulationConfig,
    ext: &E,
    stream: &mut S,
) -> Result<Outcome, SimError> {
    Simulator::new(p, Mode::RandomAccess, cfg.clone(), ext)?.simulate_a(v0, x, stream)
}

/// One run of the sequential-access algorithm with a fresh simulator.
pub fn simulate_sow<E: Extractor + ?Sized, S: BitStream + ?Sized>(
    p: &Program,
    v0: VertexId,
    x: &[bool],
    cfg: &SimulationConfig,
    ext: &E,
    stream: &mut S,
) -> Result<Outcome, SimError> {
    Simulator::new(p, Mode::Sequential, cfg.clone(), ext)?.simulate_a(v0, x, stream)
}

pub fn hybrid_sow_h1<E: Extractor + ?Sized, S: BitStream + ?Sized>(
    p: &Program,
    v0: VertexId,
    x: &[bool],
    cfg: &SimulationConfig,
    ext: &E,
    stream: &mut S,
) -> Result<Outcome, SimError> {
    Simulator::new(p, Mode::Sequential, cfg.clone(), ext)?.hybrid_h1(v0, x, stream)
}

pub fn hybrid_sow_h2<E: Extractor + ?Sized, S: BitStream + ?Sized>(
    p: &Program,
    v0: VertexId,
    x: &[bool],
    cfg: &SimulationConfig,
    ext: &E,
    stream: &mut S,
) -> Result<Outcome, SimError> {
    Simulator::new(p, Mode::Sequential, cfg.clone(), ext)?.hybrid_h2(v0, x, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{trial_stream, SliceBitStream};
    use crate::bp::{fill_bits, random_program, ProgramShape, Vertex};
    use crate::distribution::{sampled_distribution, tvd};
    use crate::extractors::SeedIdentity;
    use num_rational::BigRational;

    type Q = BigRational;

    fn shape(n: usize, width: usize, depth: usize, m: usize, d: AccessDiscipline) -> ProgramShape {
        ProgramShape {
            n,
            m,
            width,
            depth,
            discipline: d,
        }
    }

    fn x_from(seed: u64, n: usize) -> Vec<bool> {
        let mut x = vec![false; n];
        fill_bits(&mut x, seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        x
    }

    /// Small random-access plan: 4 blocks of 4 over n = 16.
    fn ra_setup(seed: u64) -> (Program, SimulationConfig) {
        let p = random_program(shape(16, 3, 5, 5, AccessDiscipline::ROw), seed).unwrap();
        let mut cfg = SimulationConfig::new(1, 5);
        cfg.block_size_override = Some(4);
        cfg.threshold_override = Some(4);
        cfg.prg_block = Some(2);
        cfg.r_override = Some(5);
        (p, cfg)
    }

    #[test]
    fn derivation_from_formulas() {
        // size 66 and n = 9 * 49 give S = 9; override the block to 49
        let p = random_program(shape(441, 8, 8, 8, AccessDiscipline::ROw), 1).unwrap();
        let mut cfg = SimulationConfig::new(1, 8);
        let params = derive_parameters(&p, Mode::RandomAccess, &cfg).unwrap();
        assert_eq!(params.space, 9);
        assert_eq!(params.nominal_block, 81);
        assert_eq!(params.threshold, 49);
        assert!(params.is_direct());

        cfg.block_size_override = Some(49);
        let plan = derive_parameters(&p, Mode::RandomAccess, &cfg)
            .unwrap()
            .plan
            .unwrap();
        assert_eq!(plan.num_blocks(), 9);
        // max(ceil(64 / 1), 8 (9 + 1))
        assert_eq!(plan.r, 80);
        assert!(plan.blocks.windows(2).all(|w| w[0].end == w[1].start));
        let want = -9.0 * core::f64::consts::LOG2_E - libm::log2(320.0);
        assert!((plan.log2_eps - want).abs() < 1e-12);
        assert!((plan.log2_eps_prime - (want + 1.0 - 9.0)).abs() < 1e-12);

        cfg.t = 200;
        let plan = derive_parameters(&p, Mode::RandomAccess, &cfg)
            .unwrap()
            .plan
            .unwrap();
        assert_eq!(plan.r, 1600);

        cfg.r_override = Some(4);
        let plan = derive_parameters(&p, Mode::RandomAccess, &cfg)
            .unwrap()
            .plan
            .unwrap();
        assert_eq!(plan.r, 4);
    }

    #[test]
    fn few_blocks_need_override() {
        let (p, mut cfg) = ra_setup(3);
        cfg.r_override = None;
        assert_eq!(
            derive_parameters(&p, Mode::RandomAccess, &cfg).unwrap_err(),
            SimError::TooFewBlocks { blocks: 4 }
        );
        cfg.block_size_override = Some(0);
        assert!(matches!(
            derive_parameters(&p, Mode::RandomAccess, &cfg),
            Err(SimError::Config(_))
        ));
    }

    #[test]
    fn terminal_start_returns_start() {
        let (p, cfg) = ra_setup(5);
        let plan = derive_parameters(&p, Mode::RandomAccess, &cfg)
            .unwrap()
            .plan
            .unwrap();
        let ext = spread_extractor(plan.source_len(), plan.nisan.seed_len());
        let sim = Simulator::new(&p, Mode::RandomAccess, cfg, &ext).unwrap();
        let t = (0..p.size()).find(|&v| p.is_terminal(v)).unwrap();
        let x = x_from(1, 16);
        for v in [Variant::A, Variant::H1, Variant::H2, Variant::H3] {
            let mut s = SliceBitStream::new(&[]);
            let out = sim.run(v, t, &x, &mut s).unwrap();
            assert_eq!(out.vertex, t);
            assert!(out.trace.phases.is_empty());
            assert_eq!(out.trace.bits, 0);
        }
    }

    #[test]
    fn direct_branch_is_exact() {
        let p = random_program(shape(12, 3, 4, 4, AccessDiscipline::ROw), 7).unwrap();
        let cfg = SimulationConfig::new(1, 6);
        let ext = SeedIdentity::new(1, 1, 1, 0.5).unwrap();
        let sim = Simulator::new(&p, Mode::RandomAccess, cfg, &ext).unwrap();
        assert!(sim.parameters().is_direct());
        let v0 = p.start().unwrap();
        for xs in 0..4 {
            let x = x_from(xs, 12);
            let mut counts = vec![0u64; p.size()];
            let mut bits = vec![false; 6];
            for k in 0..64 {
                fill_bits(&mut bits, k);
                let out = sim
                    .simulate_a(v0, &x, &mut SliceBitStream::new(&bits))
                    .unwrap();
                assert_eq!(out.trace.bits, 6);
                counts[out.vertex] += 1;
            }
            let law: Vec<Q> = counts.iter().map(|&c| Q::from_ratio(c, 64)).collect();
            let want: VertexDistribution<Q> = exact_distribution(&p, v0, &x, 1 << 20).unwrap();
            assert_eq!(law, want.into_vec());
        }
    }

    #[test]
    fn h3_law_is_exact() {
        for seed in 0..6 {
            let (p, cfg) = ra_setup(seed);
            let plan = derive_parameters(&p, Mode::RandomAccess, &cfg)
                .unwrap()
                .plan
                .unwrap();
            let ext = spread_extractor(plan.source_len(), plan.nisan.seed_len());
            let sim = Simulator::new(&p, Mode::RandomAccess, cfg, &ext).unwrap();
            let v0 = p.start().unwrap();
            for xs in 0..3 {
                let x = x_from(xs + 10 * seed, 16);
                let h3: VertexDistribution<Q> =
                    sim.exact_law(Variant::H3, v0, &x, 1 << 20).unwrap();
                let want: VertexDistribution<Q> = exact_distribution(&p, v0, &x, 1 << 20).unwrap();
                assert_eq!(h3, want);
            }
        }
    }

    /// Blocks of 4 over n = 16 with an 8-bit seed on a 2-bit generator
    /// block, and a custom extractor from 4 source bits.
    fn ra_sim_parts(seed: u64) -> (Program, SimulationConfig, PhasePlan) {
        let (p, cfg) = ra_setup(seed);
        let plan = derive_parameters(&p, Mode::RandomAccess, &cfg)
            .unwrap()
            .plan
            .unwrap();
        (p, cfg, plan)
    }

    fn spread_extractor(
        ell: usize,
        s: usize,
    ) -> crate::extractors::FnExtractor<impl Fn(&[bool], &[bool]) -> Vec<bool>> {
        use crate::extractors::{ExtractorKind, ExtractorSpec, FnExtractor};
        let spec = ExtractorSpec::new(ell, s, s, ell, 0.5, ExtractorKind::Custom).unwrap();
        FnExtractor::new(spec, move |x: &[bool], y: &[bool]| {
            y.iter()
                .enumerate()
                .map(|(k, &b)| b ^ x[k % x.len()])
                .collect()
        })
    }

    #[test]
    fn sampled_laws_match_exact_laws() {
        let (p, cfg, plan) = ra_sim_parts(11);
        let ext = spread_extractor(plan.source_len(), plan.nisan.seed_len());
        let sim = Simulator::new(&p, Mode::RandomAccess, cfg, &ext).unwrap();
        let v0 = p.start().unwrap();
        let x = x_from(4, 16);
        for v in [Variant::A, Variant::H1, Variant::H2, Variant::H3] {
            let exact: VertexDistribution<f64> = sim.exact_law(v, v0, &x, 1 << 20).unwrap();
            let sampled = sampled_distribution::<f64>(p.size(), 20_000, 99, |s| {
                sim.run(v, v0, &x, s).unwrap().vertex
            });
            let d = tvd(&exact, &sampled).unwrap();
            assert!(d < 0.03, "{v:?}: {d}");
        }
    }

    #[test]
    fn identity_extractor_makes_a_equal_h1() {
        // with a seed-passing extractor A draws uniform generator seeds
        let (p, cfg, plan) = ra_sim_parts(12);
        let s = plan.nisan.seed_len();
        let spec = crate::extractors::ExtractorSpec::new(
            4,
            s,
            s,
            4,
            0.5,
            crate::extractors::ExtractorKind::Custom,
        )
        .unwrap();
        let ext = crate::extractors::FnExtractor::new(spec, |_: &[bool], y: &[bool]| y.to_vec());
        let sim = Simulator::new(&p, Mode::RandomAccess, cfg, &ext).unwrap();
        let v0 = p.start().unwrap();
        let x = x_from(3, 16);
        let a: VertexDistribution<Q> = sim.exact_law(Variant::A, v0, &x, 1 << 20).unwrap();
        let h1: VertexDistribution<Q> = sim.exact_law(Variant::H1, v0, &x, 1 << 20).unwrap();
        assert_eq!(a, h1);
    }

    #[test]
    fn randomness_accounting() {
        let (p, cfg, plan) = ra_sim_parts(13);
        let ext = spread_extractor(plan.source_len(), plan.nisan.seed_len());
        let d = ext.spec().d;
        let sim = Simulator::new(&p, Mode::RandomAccess, cfg, &ext).unwrap();
        assert_eq!(sim.bits_per_phase(Variant::A), Some(2 + d));
        let v0 = p.start().unwrap();
        for t in 0..50 {
            let x = x_from(t, 16);
            let out = sim.simulate_a(v0, &x, &mut trial_stream(1, t)).unwrap();
            assert_eq!(out.trace.bits, plan.r * (2 + d));
            assert!(out.trace.phases.len() <= plan.r);
            assert!(out.trace.phases.iter().all(|ph| ph.steps <= 5));
        }
    }

    #[test]
    fn h3_cap_reports_non_absorption() {
        // one block covering every input: restricted reads never move
        let p = random_program(shape(4, 2, 3, 3, AccessDiscipline::ROw), 2).unwrap();
        let mut cfg = SimulationConfig::new(1, 3);
        cfg.block_size_override = Some(4);
        cfg.threshold_override = Some(4);
        cfg.r_override = Some(2);
        cfg.h3_cap_factor = 3;
        let plan = derive_parameters(&p, Mode::RandomAccess, &cfg)
            .unwrap()
            .plan
            .unwrap();
        let ext = spread_extractor(4, plan.nisan.seed_len());
        let sim = Simulator::new(&p, Mode::RandomAccess, cfg, &ext).unwrap();
        let v0 = p.start().unwrap();
        let x = [false; 4];
        let err = sim.hybrid_h3(v0, &x, &mut trial_stream(0, 0)).unwrap_err();
        assert_eq!(err, SimError::NotAbsorbed { phases: 6 });
        assert!(sim.exact_law::<Q>(Variant::H3, v0, &x, 1 << 20).is_err());
    }

    fn sow_setup(seed: u64) -> (Program, SimulationConfig) {
        let p = random_program(shape(14, 3, 6, 6, AccessDiscipline::SOw), seed).unwrap();
        let mut cfg = SimulationConfig::new(1, 6);
        cfg.block_size_override = Some(2);
        cfg.threshold_override = Some(1000);
        cfg.prg_block = Some(2);
        (p, cfg)
    }

    #[test]
    fn sequential_layout() {
        let (p, cfg) = sow_setup(1);
        let params = derive_parameters(&p, Mode::Sequential, &cfg).unwrap();
        let plan = params.plan.unwrap();
        assert_eq!(plan.num_blocks(), 7);
        assert_eq!(plan.r, 3);
        assert_eq!(plan.blocks[6], 12..14);
        assert_eq!(plan.sources[0], (4..12).collect::<Vec<_>>());
        assert_eq!(plan.sources[3], vec![0, 1, 2, 3, 10, 11, 12, 13]);
        assert_eq!(plan.sources[6], (0..8).collect::<Vec<_>>());
        assert!((plan.k - libm::sqrt(14.0)).abs() < 1e-12);
        // default threshold floor(sqrt 14) = 3 is below S^2
        let mut cfg = cfg;
        cfg.threshold_override = None;
        assert!(derive_parameters(&p, Mode::Sequential, &cfg)
            .unwrap()
            .is_direct());
    }

    #[test]
    fn sequential_h2_is_exact_and_progresses() {
        for seed in 0..5 {
            let (p, cfg) = sow_setup(seed);
            let plan = derive_parameters(&p, Mode::Sequential, &cfg)
                .unwrap()
                .plan
                .unwrap();
            let ext = spread_extractor(plan.source_len(), plan.nisan.seed_len());
            let sim = Simulator::new(&p, Mode::Sequential, cfg, &ext).unwrap();
            let v0 = p.start().unwrap();
            for xs in 0..3 {
                let x = x_from(xs + seed, 14);
                let h2: VertexDistribution<Q> =
                    sim.exact_law(Variant::H2, v0, &x, 1 << 20).unwrap();
                let want: VertexDistribution<Q> = exact_distribution(&p, v0, &x, 1 << 20).unwrap();
                assert_eq!(h2, want, "seed {seed}");
                for t in 0..40 {
                    let out = sim.hybrid_h2(v0, &x, &mut trial_stream(seed, t)).unwrap();
                    assert!(out.trace.absorbed);
                    for ph in &out.trace.phases {
                        if ph.halt == PhaseHalt::RestrictedRead {
                            assert!(ph.steps > plan.block_size);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sequential_block_is_a_function_of_the_head() {
        let (p, cfg) = sow_setup(8);
        let plan = derive_parameters(&p, Mode::Sequential, &cfg)
            .unwrap()
            .plan
            .unwrap();
        let ext = spread_extractor(plan.source_len(), plan.nisan.seed_len());
        let sim = Simulator::new(&p, Mode::Sequential, cfg, &ext).unwrap();
        let v0 = p.start().unwrap();
        let Vertex::Nonterminal { i, .. } = *p.vertex(v0) else {
            panic!("start is a nonterminal");
        };
        let d = ext.spec().d;
        for t in 0..20 {
            let x = x_from(t, 14);
            let out = sim.simulate_a(v0, &x, &mut trial_stream(3, t)).unwrap();
            assert_eq!(out.trace.phases[0].block, i / 2);
            // no bits for the block choice
            assert_eq!(out.trace.bits, plan.r * d);
        }
    }

    #[test]
    fn mismatched_extractor_is_rejected() {
        let (p, cfg) = ra_setup(1);
        let ext = spread_extractor(5, 3);
        assert!(matches!(
            Simulator::new(&p, Mode::RandomAccess, cfg, &ext),
            Err(SimError::ExtractorMismatch { .. })
        ));
    }

    #[test]
    fn length_bound_is_checked() {
        let (p, mut cfg) = ra_setup(1);
        cfg.t = p.length() - 1;
        let ext = spread_extractor(4, 4);
        assert!(matches!(
            Simulator::new(&p, Mode::RandomAccess, cfg, &ext),
            Err(SimError::LengthBound { .. } | SimError::TapeBound { .. })
        ));
    }
}
