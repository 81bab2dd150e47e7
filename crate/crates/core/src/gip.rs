//! Deterministic evaluation of sequential-access programs with coins taken
//! from the input through the generalized inner product, the three-party
//! communication cost of such programs, and error reduction from
//! one-way to random-access coins.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::bits::{bits_from_u64, ceil_log2};
use crate::bp::{fill_bits, AccessDiscipline, BpError, Program, Vertex, VertexId};
use crate::extractors::Expander;
use crate::prg::{nisan_output, NisanParams, PrgError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GipError {
    #[error("operands have lengths {0}, {1} and {2}")]
    Length(usize, usize, usize),
    #[error("{m} output bits need m <= n / 3 with n = {n}")]
    TooManyOutputs { m: usize, n: usize },
    #[error("program does not satisfy the {0:?} access discipline")]
    Discipline(AccessDiscipline),
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("construction needs {needed} vertices, cap is {cap}")]
    SizeCap { needed: u128, cap: usize },
    #[error(transparent)]
    Program(#[from] BpError),
    #[error(transparent)]
    Prg(#[from] PrgError),
}

/// `sum_i x_i y_i z_i mod 2`.
pub fn gip(x: &[bool], y: &[bool], z: &[bool]) -> Result<bool, GipError> {
    if x.len() != y.len() || y.len() != z.len() {
        return Err(GipError::Length(x.len(), y.len(), z.len()));
    }
    Ok(x.iter()
        .zip(y)
        .zip(z)
        .fold(false, |acc, ((&a, &b), &c)| acc ^ (a & b & c)))
}

/// Split of `n` input positions into three consecutive thirds, each cut
/// into `m` blocks of `ell` bits.
///
/// Third `i` has `floor(n/3)` positions plus one if `i < n mod 3`. Positions
/// past the `m` blocks of a third are unused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GipLayout {
    pub n: usize,
    pub m: usize,
    pub thirds: [Range<usize>; 3],
    pub ell: usize,
}

impl GipLayout {
    pub fn new(n: usize, m: usize) -> Result<Self, GipError> {
        if m == 0 || 3 * m > n {
            return Err(GipError::TooManyOutputs { m, n });
        }
        let base = n / 3;
        let mut start = 0;
        let thirds = core::array::from_fn(|i| {
            let len = base + (i < n % 3) as usize;
            let r = start..start + len;
            start += len;
            r
        });
        Ok(GipLayout {
            n,
            m,
            thirds,
            ell: base / m,
        })
    }

    /// Positions of block `j` of third `i`.
    pub fn block(&self, i: usize, j: usize) -> Range<usize> {
        let s = self.thirds[i].start + j * self.ell;
        s..s + self.ell
    }

    /// Positions in each third not covered by a block.
    pub fn unused(&self) -> [Range<usize>; 3] {
        core::array::from_fn(|i| self.thirds[i].start + self.m * self.ell..self.thirds[i].end)
    }

    /// Third containing position `p`.
    pub fn third_of(&self, p: usize) -> usize {
        self.thirds.iter().position(|t| t.contains(&p)).unwrap_or(2)
    }
}

/// `R(x)`: bit `j` is the inner product of block `j` of the three thirds.
pub fn generate_r(x: &[bool], m: usize) -> Result<Vec<bool>, GipError> {
    let layout = GipLayout::new(x.len(), m)?;
    Ok((0..m)
        .map(|j| {
            let [a, b, c] = [0, 1, 2].map(|i| &x[layout.block(i, j)]);
            gip(a, b, c).expect("blocks share a length")
        })
        .collect())
}

/// `P(x, R(x))`. Uses no randomness.
pub fn derandomize_sr(p: &Program, x: &[bool]) -> Result<bool, GipError> {
    if !p.validate_discipline(AccessDiscipline::SR) {
        return Err(GipError::Discipline(AccessDiscipline::SR));
    }
    if x.len() != p.n() {
        return Err(BpError::Dimension {
            what: "input",
            expected: p.n(),
            got: x.len(),
        }
        .into());
    }
    if p.m() == 0 {
        return Ok(p.compute_boolean(x, &[])?);
    }
    let r = generate_r(x, p.m())?;
    Ok(p.compute_boolean(x, &r)?)
}

/// `f(x)`: the more likely output of `P` on `x`, ties to `false`.
pub fn majority_truth(p: &Program, cap: u64) -> Result<Vec<bool>, GipError> {
    let needed = 1u128 << (p.n() + p.m()).min(127);
    if needed > cap as u128 {
        return Err(BpError::CapExceeded { needed, cap }.into());
    }
    let mut x = vec![false; p.n()];
    let mut y = vec![false; p.m()];
    (0..1u64 << p.n())
        .map(|xi| {
            fill_bits(&mut x, xi);
            let mut ones = 0u64;
            for yi in 0..1u64 << p.m() {
                fill_bits(&mut y, yi);
                ones += p.compute_boolean(&x, &y)? as u64;
            }
            Ok(2 * ones > 1 << p.m())
        })
        .collect()
}

/// Inputs on which the derandomized evaluation disagrees with `truth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MistakeCount {
    pub mistakes: u64,
    pub total: u64,
}

impl MistakeCount {
    pub fn density(&self) -> f64 {
        self.mistakes as f64 / self.total as f64
    }
}

pub fn mistake_count(p: &Program, truth: &[bool]) -> Result<MistakeCount, GipError> {
    if truth.len() as u128 != 1u128 << p.n().min(127) {
        return Err(BpError::Dimension {
            what: "truth table",
            expected: 1usize.checked_shl(p.n() as u32).unwrap_or(usize::MAX),
            got: truth.len(),
        }
        .into());
    }
    let mut x = vec![false; p.n()];
    let mut mistakes = 0;
    for (xi, &fx) in truth.iter().enumerate() {
        fill_bits(&mut x, xi as u64);
        mistakes += (derandomize_sr(p, &x)? != fx) as u64;
    }
    Ok(MistakeCount {
        mistakes,
        total: truth.len() as u64,
    })
}

/// Framing bits per handoff on top of the `S`-bit state.
pub const HANDOFF_HEADER_BITS: usize = 2;

/// One three-party execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolRun {
    pub handoffs: usize,
    /// `handoffs * (S + HANDOFF_HEADER_BITS)`.
    pub bits: usize,
    pub output: VertexId,
}

/// Runs `P` as a three-party protocol where the party that cannot see the
/// first third simulates while the head is there, and likewise for the last
/// third. Either may simulate in the middle third, so control passes each
/// time the head moves from one outer third to the other. Each handoff
/// writes the current state.
pub fn protocol_run(
    p: &Program,
    layout: &GipLayout,
    x: &[bool],
    y: &[bool],
) -> Result<ProtocolRun, GipError> {
    if !p.validate_discipline(AccessDiscipline::SR) {
        return Err(GipError::Discipline(AccessDiscipline::SR));
    }
    if layout.n != p.n() || x.len() != p.n() {
        return Err(BpError::Dimension {
            what: "input",
            expected: p.n(),
            got: x.len(),
        }
        .into());
    }
    let mut u = p.require_start()?;
    let mut side = None;
    let mut handoffs = 0;
    while let Vertex::Nonterminal { i, j, edges } = *p.vertex(u) {
        let third = layout.third_of(i);
        if third != 1 {
            if side.is_some_and(|s| s != third) {
                handoffs += 1;
            }
            side = Some(third);
        }
        u = edges[crate::bp::edge_slot(x[i], y[j])];
    }
    let state_bits = ceil_log2(p.size() as u64) as usize;
    Ok(ProtocolRun {
        handoffs,
        bits: handoffs * (state_bits + HANDOFF_HEADER_BITS),
        output: u,
    })
}

pub fn protocol_cost(
    p: &Program,
    layout: &GipLayout,
    x: &[bool],
    y: &[bool],
) -> Result<usize, GipError> {
    Ok(protocol_run(p, layout, x, y)?.bits)
}

/// Smallest odd integer at least `8 ln(1/delta)`.
pub fn amplification_rounds(delta: f64) -> Result<usize, GipError> {
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(GipError::Invalid(format!("delta {delta} outside (0, 1/3)")));
    }
    let r = libm::ceil(8.0 * libm::log(1.0 / delta) - 1e-9).max(1.0) as usize;
    Ok(r | 1)
}

/// Output of [`amplify_sow_to_sr`].
#[derive(Debug, Clone)]
pub struct Amplified {
    pub program: Program,
    pub rounds: usize,
    /// Generator seed length, also the expander's vertex length.
    pub seed_len: usize,
    pub label_bits: usize,
    /// Vertex count predicted by [`amplified_size`].
    pub predicted_size: u128,
}

/// Exact vertex count of the construction: the seed-reading tree, `t`
/// copies of the nonterminals per seed in round `t`, the return sweeps and
/// label-reading trees between rounds, and two output terminals.
pub fn amplified_size(
    n: usize,
    nonterminals: usize,
    seed_len: usize,
    label_bits: usize,
    rounds: usize,
) -> u128 {
    let seeds = 1u128 << seed_len;
    let labels = (1u128 << label_bits) - 1;
    let mut total = seeds - 1 + 2;
    for t in 1..=rounds as u128 {
        total += t * nonterminals as u128 * seeds;
        if t < rounds as u128 {
            total += (t + 1) * (n as u128 - 1) * seeds + (t + 1) * seeds * labels;
        }
    }
    total
}

/// Majority vote over `rounds` runs of a one-way program, each on the
/// generator output of one vertex of an expander walk.
///
/// The coins of the result are the walk's start vertex (`seed_len` bits)
/// followed by `rounds - 1` edge labels. Every run starts at the start
/// vertex of `P`; between runs the head sweeps back to the start vertex's
/// input position so the result keeps sequential input access. Coins are
/// read out of order, hence random access to them.
///
/// States carry the round, the number of accepting runs so far and the
/// current walk vertex, and all of them are materialized, so the size is
/// exactly [`amplified_size`].
pub fn amplify_sow_to_sr(
    p: &Program,
    delta: f64,
    rounds_override: Option<usize>,
    nisan: &NisanParams,
    cap: usize,
) -> Result<Amplified, GipError> {
    if !p.validate_discipline(AccessDiscipline::SOw) {
        return Err(GipError::Discipline(AccessDiscipline::SOw));
    }
    let rounds = match rounds_override {
        Some(0) => return Err(GipError::Invalid("at least one round".into())),
        Some(r) => r,
        None => amplification_rounds(delta)?,
    };
    if nisan.len < p.m() {
        return Err(GipError::Invalid(format!(
            "generator output {} is shorter than the tape {}",
            nisan.len,
            p.m()
        )));
    }
    let v0 = p.require_start()?;
    let n = p.n();
    let s = nisan.seed_len();
    let expander = Expander::new(s);
    let w = expander.label_bits();
    let m2 = s + (rounds - 1) * w;
    if let Vertex::Terminal { out } = *p.vertex(v0) {
        let program = Program::new(n, m2, vec![Vertex::Terminal { out }], Some(0), None)?;
        return Ok(Amplified {
            program,
            rounds,
            seed_len: s,
            label_bits: w,
            predicted_size: 1,
        });
    }
    let nonterminals: Vec<VertexId> = (0..p.size()).filter(|&u| !p.is_terminal(u)).collect();
    let predicted = amplified_size(n, nonterminals.len(), s, w, rounds);
    if s >= 32 || w >= 32 || predicted > cap as u128 {
        return Err(GipError::SizeCap {
            needed: predicted,
            cap,
        });
    }
    let i0 = p.vertex(v0).indices().expect("nonterminal start").0;
    Builder {
        p,
        n,
        s,
        w,
        rounds,
        i0,
        expander,
        nonterminals,
        nisan,
    }
    .build(m2, predicted)
}

struct Builder<'a> {
    p: &'a Program,
    n: usize,
    s: usize,
    w: usize,
    rounds: usize,
    i0: usize,
    expander: Expander,
    nonterminals: Vec<VertexId>,
    nisan: &'a NisanParams,
}

/// Vertex ids by region. Offsets are in `build` order.
struct Ids {
    seeds: usize,
    nonterminals: usize,
    labels: usize,
    tree: usize,
    run: Vec<usize>,
    sweep: Vec<usize>,
    label: Vec<usize>,
    accept: usize,
    reject: usize,
    local: Vec<usize>,
}

impl Ids {
    fn run(&self, t: usize, ones: usize, u: usize, y: usize) -> usize {
        self.run[t - 1] + (ones * self.nonterminals + self.local[u]) * self.seeds + y
    }
    fn sweep(&self, t: usize, ones: usize, h: usize, i0: usize, n: usize, y: usize) -> usize {
        // positions other than i0, in order
        let slot = if h < i0 { h } else { h - 1 };
        self.sweep[t - 1] + (ones * (n - 1) + slot) * self.seeds + y
    }
    /// `node` is the label-tree node in heap order: 0 is the root, children
    /// of `k` are `2k + 1` (bit 0) and `2k + 2` (bit 1).
    fn label(&self, t: usize, ones: usize, y: usize, node: usize) -> usize {
        self.label[t - 1] + ((ones * self.seeds + y) * self.labels) + node
    }
}

impl Builder<'_> {
    fn build(self, m2: usize, predicted: u128) -> Result<Amplified, GipError> {
        let seeds = 1usize << self.s;
        let labels = (1usize << self.w) - 1;
        let k = self.nonterminals.len();
        let mut local = vec![usize::MAX; self.p.size()];
        for (idx, &u) in self.nonterminals.iter().enumerate() {
            local[u] = idx;
        }
        let mut next = seeds - 1;
        let mut run = Vec::new();
        for t in 1..=self.rounds {
            run.push(next);
            next += t * k * seeds;
        }
        let mut sweep = Vec::new();
        let mut label = Vec::new();
        for t in 1..self.rounds {
            sweep.push(next);
            next += (t + 1) * (self.n - 1) * seeds;
            label.push(next);
            next += (t + 1) * seeds * labels;
        }
        let ids = Ids {
            seeds,
            nonterminals: k,
            labels,
            tree: 0,
            run,
            sweep,
            label,
            accept: next,
            reject: next + 1,
            local,
        };
        let size = next + 2;
        debug_assert_eq!(size as u128, predicted);

        let tapes: Vec<Vec<bool>> = (0..seeds as u64)
            .map(|y| nisan_output(&bits_from_u64(y, self.s), self.nisan))
            .collect::<Result<_, _>>()?;
        let mut vertices = vec![Vertex::Terminal { out: None }; size];
        let read = |i: usize, j: usize, e: [VertexId; 2]| Vertex::Nonterminal {
            i,
            j,
            edges: [e[0], e[1], e[0], e[1]],
        };

        // seed tree: node k at depth d reads coin d
        let first_run = |y: usize| ids.run(1, 0, self.p.require_start().unwrap(), y);
        for node in 0..seeds - 1 {
            let depth = usize::BITS as usize - 1 - (node + 1).leading_zeros() as usize;
            let prefix = node + 1 - (1 << depth);
            let child = |bit: usize| {
                let c = 2 * node + 1 + bit;
                if c < seeds - 1 {
                    ids.tree + c
                } else {
                    first_run(prefix | bit << depth)
                }
            };
            vertices[ids.tree + node] = read(self.i0, depth, [child(0), child(1)]);
        }

        // runs
        for t in 1..=self.rounds {
            for ones in 0..t {
                for &u in &self.nonterminals {
                    let Vertex::Nonterminal { i, j, edges } = *self.p.vertex(u) else {
                        unreachable!()
                    };
                    for y in 0..seeds {
                        let c = tapes[y][j];
                        let target = |a: bool| {
                            let v = edges[crate::bp::edge_slot(a, c)];
                            match *self.p.vertex(v) {
                                Vertex::Nonterminal { .. } => ids.run(t, ones, v, y),
                                Vertex::Terminal { out } => {
                                    let ones = ones + out.unwrap_or(false) as usize;
                                    if t == self.rounds {
                                        if 2 * ones > self.rounds {
                                            ids.accept
                                        } else {
                                            ids.reject
                                        }
                                    } else if i == self.i0 {
                                        ids.label(t, ones, y, 0)
                                    } else {
                                        ids.sweep(t, ones, i, self.i0, self.n, y)
                                    }
                                }
                            }
                        };
                        let (e0, e1) = (target(false), target(true));
                        vertices[ids.run(t, ones, u, y)] = Vertex::Nonterminal {
                            i,
                            j: 0,
                            edges: [e0, e0, e1, e1],
                        };
                    }
                }
            }
        }

        // sweeps back to i0, then label trees
        for t in 1..self.rounds {
            for ones in 0..=t {
                for y in 0..seeds {
                    for h in (0..self.n).filter(|&h| h != self.i0) {
                        let next_h = if h < self.i0 { h + 1 } else { h - 1 };
                        let to = if next_h == self.i0 {
                            ids.label(t, ones, y, 0)
                        } else {
                            ids.sweep(t, ones, next_h, self.i0, self.n, y)
                        };
                        vertices[ids.sweep(t, ones, h, self.i0, self.n, y)] = read(h, 0, [to, to]);
                    }
                    let start = bits_from_u64(y as u64, self.s);
                    for node in 0..labels {
                        let depth = usize::BITS as usize - 1 - (node + 1).leading_zeros() as usize;
                        let prefix = node + 1 - (1 << depth);
                        let coin = self.s + (t - 1) * self.w + depth;
                        let child = |bit: usize| {
                            let c = 2 * node + 1 + bit;
                            if c < labels {
                                ids.label(t, ones, y, c)
                            } else {
                                let lab = bits_from_u64((prefix | bit << depth) as u64, self.w);
                                let y2 =
                                    crate::bits::bits_to_u64(&self.expander.neighbor(&start, &lab))
                                        as usize;
                                ids.run(t + 1, ones, self.p.require_start().unwrap(), y2)
                            }
                        };
                        vertices[ids.label(t, ones, y, node)] =
                            read(self.i0, coin, [child(0), child(1)]);
                    }
                }
            }
        }
        vertices[ids.accept] = Vertex::Terminal { out: Some(true) };
        vertices[ids.reject] = Vertex::Terminal { out: Some(false) };

        let start = if seeds > 1 { ids.tree } else { first_run(0) };
        let program = Program::new(self.n, m2, vertices, Some(start), Some(ids.accept))?;
        Ok(Amplified {
            program,
            rounds: self.rounds,
            seed_len: self.s,
            label_bits: self.w,
            predicted_size: predicted,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::parse_bitstring;
    use crate::bp::{random_program, ProgramShape};
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn b(s: &str) -> Vec<bool> {
        parse_bitstring(s).unwrap()
    }

    #[test]
    fn gip_examples() {
        assert!(gip(&b("1"), &b("1"), &b("1")).unwrap());
        assert!(gip(&b("11"), &b("11"), &b("10")).unwrap());
        assert!(!gip(&b("1011"), &b("1111"), &b("0000")).unwrap());
        assert!(gip(&b("1"), &b("11"), &b("1")).is_err());
    }

    #[test]
    fn layout_roundoff() {
        let l = GipLayout::new(20, 3).unwrap();
        assert_eq!(l.thirds, [0..7, 7..14, 14..20]);
        assert_eq!(l.ell, 2);
        assert_eq!(l.block(1, 2), 11..13);
        assert_eq!(l.unused(), [6..7, 13..14, 20..20]);
        assert!(GipLayout::new(8, 3).is_err());
    }

    #[test]
    fn r_small_cases() {
        for x in 0..8u64 {
            let xb = bits_from_u64(x, 3);
            assert_eq!(generate_r(&xb, 1).unwrap(), [x == 7]);
        }
        assert_eq!(generate_r(&[false; 12], 4).unwrap(), [false; 4]);
        assert!(generate_r(&[false; 5], 2).is_err());
    }

    /// Recomputes the blocks from the definition with plain index arithmetic.
    fn r_oracle(x: u64, n: usize, m: usize) -> Vec<bool> {
        let len = |i: usize| n / 3 + usize::from(i < n % 3);
        let ell = (n / 3) / m;
        let offset = |i: usize| (0..i).map(len).sum::<usize>();
        (0..m)
            .map(|j| {
                let mut acc = 0;
                for q in 0..ell {
                    let bit = |i: usize| (x >> (offset(i) + j * ell + q)) & 1;
                    acc ^= bit(0) & bit(1) & bit(2);
                }
                acc == 1
            })
            .collect()
    }

    #[test]
    fn r_matches_oracle_n18() {
        for x in (0..1u64 << 18).step_by(97) {
            assert_eq!(
                generate_r(&bits_from_u64(x, 18), 2).unwrap(),
                r_oracle(x, 18, 2)
            );
        }
    }

    #[test]
    fn flipping_a_first_third_bit() {
        let (n, m) = (16, 2);
        let l = GipLayout::new(n, m).unwrap();
        for x in (0..1u64 << n).step_by(1013) {
            let xb = bits_from_u64(x, n);
            let r = generate_r(&xb, m).unwrap();
            for j in 0..m {
                for q in 0..l.ell {
                    let p = l.block(0, j).start + q;
                    let mut x2 = xb.clone();
                    x2[p] ^= true;
                    let r2 = generate_r(&x2, m).unwrap();
                    let aligned = xb[l.block(1, j).start + q] && xb[l.block(2, j).start + q];
                    for jj in 0..m {
                        assert_eq!(r2[jj] != r[jj], jj == j && aligned);
                    }
                }
            }
        }
    }

    /// Program on `n` inputs that walks positions `path` in order, ignoring
    /// values and coins, then accepts.
    fn path_program(n: usize, path: &[usize]) -> Program {
        let mut vertices: Vec<Vertex> = path
            .iter()
            .enumerate()
            .map(|(k, &i)| Vertex::Nonterminal {
                i,
                j: 0,
                edges: [k + 1; 4],
            })
            .collect();
        vertices.push(Vertex::Terminal { out: Some(true) });
        Program::new(n, 1, vertices, Some(0), None).unwrap()
    }

    #[test]
    fn protocol_examples() {
        let l = GipLayout::new(9, 1).unwrap();
        let x = [false; 9];
        let p = path_program(9, &[0, 1, 2, 1, 0]);
        assert_eq!(protocol_run(&p, &l, &x, &[false]).unwrap().handoffs, 0);
        let p = path_program(9, &(0..9).collect::<Vec<_>>());
        let run = protocol_run(&p, &l, &x, &[false]).unwrap();
        assert_eq!(run.handoffs, 1);
        assert_eq!(run.bits, 4 + HANDOFF_HEADER_BITS);
        let p = path_program(9, &[3, 4, 5, 6, 5, 4, 3, 2, 3, 4, 5, 6, 7, 6]);
        assert_eq!(protocol_run(&p, &l, &x, &[false]).unwrap().handoffs, 2);
    }

    #[test]
    fn protocol_cost_shape_on_random_programs() {
        let n = 12;
        let l = GipLayout::new(n, 2).unwrap();
        for seed in 0..30 {
            let shape = ProgramShape {
                n,
                m: 4,
                width: 4,
                depth: 20,
                discipline: AccessDiscipline::SR,
            };
            let p = random_program(shape, seed).unwrap();
            let s = ceil_log2(p.size() as u64) as usize;
            let bound = p.length().div_ceil(l.thirds[1].len()) * 2 * (s + HANDOFF_HEADER_BITS);
            for xs in 0..8u64 {
                let x = bits_from_u64(xs.wrapping_mul(0x2545_f491), n);
                let y = bits_from_u64(xs, 4);
                assert!(protocol_cost(&p, &l, &x, &y).unwrap() <= bound);
            }
        }
    }

    #[test]
    fn derandomized_evaluation() {
        // coin-ignoring program: x0 AND x1
        let vertices = vec![
            Vertex::Nonterminal {
                i: 0,
                j: 0,
                edges: [3, 3, 1, 1],
            },
            Vertex::Nonterminal {
                i: 1,
                j: 0,
                edges: [3, 3, 2, 2],
            },
            Vertex::Terminal { out: Some(true) },
            Vertex::Terminal { out: Some(false) },
        ];
        let p = Program::new(6, 1, vertices, Some(0), None).unwrap();
        for x in 0..64u64 {
            let xb = bits_from_u64(x, 6);
            assert_eq!(derandomize_sr(&p, &xb).unwrap(), xb[0] && xb[1]);
        }
        // outputs coin 0
        let vertices = vec![
            Vertex::Nonterminal {
                i: 0,
                j: 0,
                edges: [2, 1, 2, 1],
            },
            Vertex::Terminal { out: Some(true) },
            Vertex::Terminal { out: Some(false) },
        ];
        let p = Program::new(6, 1, vertices, Some(0), None).unwrap();
        for x in 0..64u64 {
            let xb = bits_from_u64(x, 6);
            assert_eq!(
                derandomize_sr(&p, &xb).unwrap(),
                generate_r(&xb, 1).unwrap()[0]
            );
        }
    }

    /// Reads `x0` and coins 0, 1; answers `x0` unless both coins are 1.
    pub(crate) fn quarter_error_program(n: usize) -> Program {
        let vertices = vec![
            Vertex::Nonterminal {
                i: 0,
                j: 0,
                edges: [5, 1, 4, 2],
            },
            Vertex::Nonterminal {
                i: 0,
                j: 1,
                edges: [5, 4, 5, 4],
            },
            Vertex::Nonterminal {
                i: 0,
                j: 1,
                edges: [4, 5, 4, 5],
            },
            Vertex::Terminal { out: None },
            Vertex::Terminal { out: Some(true) },
            Vertex::Terminal { out: Some(false) },
        ];
        Program::new(n, 2, vertices, Some(0), None).unwrap()
    }

    #[test]
    fn quarter_error_program_fails_a_quarter() {
        let p = quarter_error_program(2);
        let truth: Vec<bool> = (0..4).map(|x| x & 1 == 1).collect();
        assert_eq!(
            p.failure_probability(&truth, 1 << 10).unwrap(),
            BigRational::new(BigInt::from(1), BigInt::from(4))
        );
    }

    #[test]
    fn rounds_from_delta() {
        assert_eq!(amplification_rounds(0.33).unwrap(), 9);
        assert_eq!(amplification_rounds(0.1).unwrap(), 19);
        assert!(amplification_rounds(0.5).is_err());
    }

    #[test]
    fn amplified_quarter_error() {
        let p = quarter_error_program(2);
        let nisan = NisanParams::with_block(1, 2, 0.25, 2).unwrap();
        let a = amplify_sow_to_sr(&p, 0.33, None, &nisan, 1 << 20).unwrap();
        assert_eq!((a.rounds, a.seed_len, a.label_bits), (9, 2, 2));
        assert_eq!(a.program.m(), 18);
        assert_eq!(a.program.size() as u128, a.predicted_size);
        assert!(a.program.validate_discipline(AccessDiscipline::SR));
        assert!(a.program.queries() <= a.rounds * (p.queries() + p.n()));
        let truth: Vec<bool> = (0..4).map(|x| x & 1 == 1).collect();
        assert_eq!(
            a.program.failure_probability(&truth, 1 << 22).unwrap(),
            BigRational::new(BigInt::from(12826), BigInt::from(262144))
        );
    }

    #[test]
    fn single_round_is_one_seeded_run() {
        let p = quarter_error_program(3);
        let nisan = NisanParams::with_block(1, 2, 0.25, 2).unwrap();
        let a = amplify_sow_to_sr(&p, 0.2, Some(1), &nisan, 1 << 20).unwrap();
        assert_eq!(a.program.m(), 2);
        for x in 0..8u64 {
            let xb = bits_from_u64(x, 3);
            for y in 0..4u64 {
                let yb = bits_from_u64(y, 2);
                let tape = nisan_output(&yb, &nisan).unwrap();
                assert_eq!(
                    a.program.compute_boolean(&xb, &yb).unwrap(),
                    p.compute_boolean(&xb, &tape).unwrap()
                );
            }
        }
    }

    #[test]
    fn deterministic_inner_program_stays_correct() {
        // x1 XOR x2 with sequential reads starting at x1, coins ignored
        let vertices = vec![
            Vertex::Nonterminal {
                i: 1,
                j: 0,
                edges: [1, 1, 2, 2],
            },
            Vertex::Nonterminal {
                i: 2,
                j: 0,
                edges: [4, 4, 3, 3],
            },
            Vertex::Nonterminal {
                i: 2,
                j: 0,
                edges: [3, 3, 4, 4],
            },
            Vertex::Terminal { out: Some(true) },
            Vertex::Terminal { out: Some(false) },
        ];
        let p = Program::new(4, 1, vertices, Some(0), None).unwrap();
        let nisan = NisanParams::with_block(1, 2, 0.25, 2).unwrap();
        let a = amplify_sow_to_sr(&p, 0.3, Some(3), &nisan, 1 << 20).unwrap();
        assert_eq!(a.program.size() as u128, amplified_size(4, 3, 2, 2, 3));
        let truth: Vec<bool> = (0..16u64).map(|x| ((x >> 1) ^ (x >> 2)) & 1 == 1).collect();
        assert_eq!(
            a.program.failure_probability(&truth, 1 << 22).unwrap(),
            BigRational::from_integer(0.into())
        );
    }

    #[test]
    fn size_cap() {
        let p = quarter_error_program(2);
        let nisan = NisanParams::with_block(1, 2, 0.25, 2).unwrap();
        assert!(matches!(
            amplify_sow_to_sr(&p, 0.33, None, &nisan, 100),
            Err(GipError::SizeCap { .. })
        ));
    }
}
