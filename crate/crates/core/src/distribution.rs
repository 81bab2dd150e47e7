//! Exact and sampled distributions over vertices, stochastic matrices and
//! absorbing chains.
//!
//! Everything is generic over [`Prob`], implemented for `f64` and for
//! `BigRational` (exact mode).

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::bits::{trial_stream, BitStream, RngBitStream};
use crate::bp::{edge_slot, fill_bits, AccessDiscipline, BpError, Program, Vertex, VertexId};

/// Probability arithmetic: exact rationals or floats.
pub trait Prob: Num + Signed + Clone + PartialOrd + Debug {
    fn from_ratio(num: u64, den: u64) -> Self;
    fn to_f64(&self) -> f64;
    /// Whether `self` is one, exactly or within float slack.
    fn is_unit(&self) -> bool;

    fn add_in(&mut self, other: &Self) {
        *self = self.clone() + other.clone();
    }
    fn times(&self, other: &Self) -> Self {
        self.clone() * other.clone()
    }
    fn half(&self) -> Self {
        self.clone() / Self::from_ratio(2, 1)
    }
}

impl Prob for f64 {
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_unit(&self) -> bool {
        libm::fabs(self - 1.0) <= 1e-9
    }
    fn add_in(&mut self, other: &Self) {
        *self += *other;
    }
}

impl Prob for BigRational {
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_unit(&self) -> bool {
        self.is_one()
    }
    fn add_in(&mut self, other: &Self) {
        *self += other;
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DistError {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("row {0} is not a probability vector")]
    NotStochastic(usize),
    #[error("chain does not absorb: no terminal reachable from state {0}")]
    NonAbsorbing(VertexId),
    #[error("enumeration needs {needed} evaluations, cap is {cap}")]
    CapExceeded { needed: u128, cap: u64 },
    #[error(transparent)]
    Program(#[from] BpError),
}

/// Dense probability vector indexed by vertex id.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexDistribution<W> {
    probs: Vec<W>,
}

impl<W: Prob> VertexDistribution<W> {
    pub fn from_vec(probs: Vec<W>) -> Self {
        VertexDistribution { probs }
    }

    pub fn point(size: usize, v: VertexId) -> Self {
        let mut probs = vec![W::zero(); size];
        probs[v] = W::one();
        VertexDistribution { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
    pub fn get(&self, v: VertexId) -> &W {
        &self.probs[v]
    }
    pub fn as_slice(&self) -> &[W] {
        &self.probs
    }
    pub fn into_vec(self) -> Vec<W> {
        self.probs
    }

    pub fn total(&self) -> W {
        let mut s = W::zero();
        for p in &self.probs {
            s.add_in(p);
        }
        s
    }

    /// Nonzero entries in increasing vertex order.
    pub fn support(&self) -> impl Iterator<Item = (VertexId, &W)> {
        self.probs.iter().enumerate().filter(|(_, p)| !p.is_zero())
    }

    /// Pushes mass through `map` (e.g. from a derived program back to the
    /// original vertex ids).
    pub fn project(&self, size: usize, map: &[VertexId]) -> Self {
        let mut probs = vec![W::zero(); size];
        for (v, p) in self.probs.iter().enumerate() {
            if !p.is_zero() {
                probs[map[v]].add_in(p);
            }
        }
        VertexDistribution { probs }
    }

    pub fn to_f64(&self) -> VertexDistribution<f64> {
        VertexDistribution {
            probs: self.probs.iter().map(Prob::to_f64).collect(),
        }
    }
}

/// Half the l1 distance.
pub fn tvd<W: Prob>(p: &VertexDistribution<W>, q: &VertexDistribution<W>) -> Result<W, DistError> {
    if p.len() != q.len() {
        return Err(DistError::Dimension(p.len(), q.len()));
    }
    Ok(row_tvd(&p.probs, &q.probs))
}

fn row_tvd<W: Prob>(p: &[W], q: &[W]) -> W {
    let mut s = W::zero();
    for (a, b) in p.iter().zip(q) {
        s.add_in(&(a.clone() - b.clone()).abs());
    }
    s.half()
}

/// Square row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix<W> {
    dim: usize,
    entries: Vec<W>,
}

impl<W: Prob> StochasticMatrix<W> {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![W::zero(); dim * dim];
        for u in 0..dim {
            entries[u * dim + u] = W::one();
        }
        StochasticMatrix { dim, entries }
    }

    /// Validates that every row is a probability vector.
    pub fn from_rows(rows: Vec<Vec<W>>) -> Result<Self, DistError> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for (u, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(DistError::Dimension(row.len(), dim));
            }
            let mut s = W::zero();
            for w in &row {
                if w.is_negative() {
                    return Err(DistError::NotStochastic(u));
                }
                s.add_in(w);
            }
            if !s.is_unit() {
                return Err(DistError::NotStochastic(u));
            }
            entries.extend(row);
        }
        Ok(StochasticMatrix { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn row(&self, u: usize) -> &[W] {
        &self.entries[u * self.dim..(u + 1) * self.dim]
    }
    pub fn get(&self, u: usize, v: usize) -> &W {
        &self.entries[u * self.dim + v]
    }
    pub fn rows(&self) -> impl Iterator<Item = &[W]> {
        self.entries.chunks(self.dim.max(1)).take(self.dim)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, DistError> {
        if self.dim != other.dim {
            return Err(DistError::Dimension(self.dim, other.dim));
        }
        let d = self.dim;
        let mut entries = vec![W::zero(); d * d];
        for u in 0..d {
            for k in 0..d {
                let a = &self.entries[u * d + k];
                if a.is_zero() {
                    continue;
                }
                for v in 0..d {
                    let b = &other.entries[k * d + v];
                    if !b.is_zero() {
                        entries[u * d + v].add_in(&a.times(b));
                    }
                }
            }
        }
        Ok(StochasticMatrix { dim: d, entries })
    }

    /// `dist * M`.
    pub fn apply(&self, dist: &VertexDistribution<W>) -> Result<VertexDistribution<W>, DistError> {
        if dist.len() != self.dim {
            return Err(DistError::Dimension(dist.len(), self.dim));
        }
        let d = self.dim;
        let mut out = vec![W::zero(); d];
        for (u, p) in dist.support() {
            for (v, w) in self.row(u).iter().enumerate() {
                if !w.is_zero() {
                    out[v].add_in(&p.times(w));
                }
            }
        }
        Ok(VertexDistribution::from_vec(out))
    }
}

/// `M^r` by repeated multiplication.
pub fn matrix_power<W: Prob>(m: &StochasticMatrix<W>, r: u32) -> StochasticMatrix<W> {
    let mut acc = StochasticMatrix::identity(m.dim);
    for _ in 0..r {
        acc = acc.mul(m).expect("same dimension");
    }
    acc
}

/// Largest row-wise total variation distance.
pub fn matrix_closeness<W: Prob>(
    a: &StochasticMatrix<W>,
    b: &StochasticMatrix<W>,
) -> Result<W, DistError> {
    if a.dim != b.dim {
        return Err(DistError::Dimension(a.dim, b.dim));
    }
    let mut worst = W::zero();
    for u in 0..a.dim {
        let t = row_tvd(a.row(u), b.row(u));
        if t > worst {
            worst = t;
        }
    }
    Ok(worst)
}

/// `M[u][v] = #{k < outcomes : step(u, k) = v} / outcomes`.
pub fn transition_matrix<W: Prob>(
    dim: usize,
    outcomes: u64,
    cap: u64,
    mut step: impl FnMut(VertexId, u64) -> VertexId,
) -> Result<StochasticMatrix<W>, DistError> {
    let needed = dim as u128 * outcomes as u128;
    if needed > cap as u128 {
        return Err(DistError::CapExceeded { needed, cap });
    }
    let mut counts = vec![0u64; dim * dim];
    for u in 0..dim {
        for k in 0..outcomes {
            counts[u * dim + step(u, k)] += 1;
        }
    }
    let entries = counts
        .into_iter()
        .map(|c| W::from_ratio(c, outcomes))
        .collect();
    Ok(StochasticMatrix { dim, entries })
}

/// Law of `eval(P, v0, x, Y)` for uniform `Y`.
///
/// One-way programs use a dynamic program over vertices; anything else is
/// enumerated over all `2^m` random strings, subject to `cap`.
pub fn exact_distribution<W: Prob>(
    p: &Program,
    v0: VertexId,
    x: &[bool],
    cap: u64,
) -> Result<VertexDistribution<W>, DistError> {
    if v0 >= p.size() {
        return Err(BpError::UnknownVertex(v0).into());
    }
    if x.len() != p.n() {
        return Err(BpError::Dimension {
            what: "input",
            expected: p.n(),
            got: x.len(),
        }
        .into());
    }
    if p.validate_discipline(AccessDiscipline::ROw) {
        Ok(one_way_walk_distribution(p, v0, x, |_| true))
    } else {
        enumerate_distribution(p, v0, x, cap)
    }
}

/// Law of `eval` by looping over every random string.
pub fn enumerate_distribution<W: Prob>(
    p: &Program,
    v0: VertexId,
    x: &[bool],
    cap: u64,
) -> Result<VertexDistribution<W>, DistError> {
    let needed = 1u128 << p.m().min(127);
    if needed > cap as u128 {
        return Err(DistError::CapExceeded { needed, cap });
    }
    let mut counts = vec![0u64; p.size()];
    let mut y = vec![false; p.m()];
    let total = 1u64 << p.m();
    for k in 0..total {
        fill_bits(&mut y, k);
        counts[p.eval(v0, x, &y)?] += 1;
    }
    Ok(VertexDistribution::from_vec(
        counts
            .into_iter()
            .map(|c| W::from_ratio(c, total))
            .collect(),
    ))
}

/// Law of the end vertex of a walk from `v0` that halts at terminals and at
/// nonterminals whose input index fails `allowed`, for a one-way program and
/// uniform randomness.
///
/// The state carried along is the vertex plus, if the next vertex re-reads
/// the same random index, the bit already seen there.
pub fn one_way_walk_distribution<W: Prob>(
    p: &Program,
    v0: VertexId,
    x: &[bool],
    allowed: impl Fn(usize) -> bool,
) -> VertexDistribution<W> {
    let size = p.size();
    // slot 0: bit at j(u) not yet read; slot 1 + b: already read as b
    let mut mass: Vec<[W; 3]> = vec![[W::zero(), W::zero(), W::zero()]; size];
    mass[v0][0] = W::one();
    let mut out = vec![W::zero(); size];
    let half = W::from_ratio(1, 2);
    let order = p.topological_order();
    let first = order
        .iter()
        .position(|&u| u == v0)
        .expect("vertex in order");
    for &u in &order[first..] {
        let slots = core::mem::replace(&mut mass[u], [W::zero(), W::zero(), W::zero()]);
        if slots.iter().all(Zero::is_zero) {
            continue;
        }
        match p.vertex(u) {
            Vertex::Nonterminal { i, j, edges } if allowed(*i) => {
                let mut push = |bit: bool, w: W| {
                    let t = edges[edge_slot(x[*i], bit)];
                    let slot = match p.vertex(t) {
                        Vertex::Nonterminal { j: j2, .. } if j2 == j => 1 + bit as usize,
                        _ => 0,
                    };
                    mass[t][slot].add_in(&w);
                };
                if !slots[0].is_zero() {
                    let h = slots[0].times(&half);
                    push(false, h.clone());
                    push(true, h);
                }
                for b in [false, true] {
                    let w = &slots[1 + b as usize];
                    if !w.is_zero() {
                        push(b, w.clone());
                    }
                }
            }
            _ => {
                for w in &slots {
                    out[u].add_in(w);
                }
            }
        }
    }
    VertexDistribution::from_vec(out)
}

/// Empirical law of `sampler` over `trials` independent streams derived
/// from `master_seed`.
pub fn sampled_distribution<W: Prob>(
    size: usize,
    trials: u64,
    master_seed: u64,
    mut sampler: impl FnMut(&mut RngBitStream<rand_chacha::ChaCha8Rng>) -> VertexId,
) -> VertexDistribution<W> {
    let mut counts = vec![0u64; size];
    for t in 0..trials {
        let mut stream = trial_stream(master_seed, t);
        counts[sampler(&mut stream)] += 1;
    }
    VertexDistribution::from_vec(
        counts
            .into_iter()
            .map(|c| W::from_ratio(c, trials.max(1)))
            .collect(),
    )
}

/// Count vector to frequencies.
pub fn frequencies<W: Prob>(counts: &[u64]) -> VertexDistribution<W> {
    let total: u64 = counts.iter().sum();
    VertexDistribution::from_vec(
        counts
            .iter()
            .map(|&c| W::from_ratio(c, total.max(1)))
            .collect(),
    )
}

/// Law of the absorbed state of the chain `M` started at `v0`, where the
/// states flagged in `terminal` absorb.
///
/// When the chain only moves forward apart from self-loops (the case for
/// phase matrices of a DAG) mass is pushed through in topological order;
/// otherwise the absorption system is solved by elimination.
pub fn absorbing_distribution<W: Prob>(
    m: &StochasticMatrix<W>,
    v0: VertexId,
    terminal: &[bool],
) -> Result<VertexDistribution<W>, DistError> {
    let transient = absorbing_precheck(m, v0, terminal)?;
    if terminal[v0] {
        return Ok(VertexDistribution::point(m.dim, v0));
    }
    match forward_order(m, &transient, terminal) {
        Some(order) => Ok(absorb_forward(m, v0, terminal, &order)),
        None => absorb_solve(m, v0, terminal, &transient),
    }
}

/// Same result as [`absorbing_distribution`], always by elimination.
pub fn absorbing_distribution_solved<W: Prob>(
    m: &StochasticMatrix<W>,
    v0: VertexId,
    terminal: &[bool],
) -> Result<VertexDistribution<W>, DistError> {
    let transient = absorbing_precheck(m, v0, terminal)?;
    if terminal[v0] {
        return Ok(VertexDistribution::point(m.dim, v0));
    }
    absorb_solve(m, v0, terminal, &transient)
}

/// Transient states reachable from `v0`, after checking each can reach a
/// terminal.
fn absorbing_precheck<W: Prob>(
    m: &StochasticMatrix<W>,
    v0: VertexId,
    terminal: &[bool],
) -> Result<Vec<VertexId>, DistError> {
    let d = m.dim;
    if terminal.len() != d {
        return Err(DistError::Dimension(terminal.len(), d));
    }
    if v0 >= d {
        return Err(BpError::UnknownVertex(v0).into());
    }
    if terminal[v0] {
        return Ok(Vec::new());
    }
    let mut seen = vec![false; d];
    seen[v0] = true;
    let mut queue = VecDeque::from([v0]);
    let mut transient = Vec::new();
    while let Some(u) = queue.pop_front() {
        transient.push(u);
        for (v, w) in m.row(u).iter().enumerate() {
            if !w.is_zero() && !seen[v] {
                seen[v] = true;
                if !terminal[v] {
                    queue.push_back(v);
                }
            }
        }
    }
    // backwards from terminals
    let mut good = terminal.to_vec();
    let mut changed = true;
    while changed {
        changed = false;
        for &u in &transient {
            if !good[u]
                && m.row(u)
                    .iter()
                    .enumerate()
                    .any(|(v, w)| !w.is_zero() && good[v])
            {
                good[u] = true;
                changed = true;
            }
        }
    }
    if let Some(&u) = transient.iter().find(|&&u| !good[u]) {
        return Err(DistError::NonAbsorbing(u));
    }
    transient.sort_unstable();
    Ok(transient)
}

fn forward_order<W: Prob>(
    m: &StochasticMatrix<W>,
    transient: &[VertexId],
    terminal: &[bool],
) -> Option<Vec<VertexId>> {
    let d = m.dim;
    let mut member = vec![false; d];
    for &u in transient {
        member[u] = true;
    }
    let mut indeg = vec![0usize; d];
    for &u in transient {
        for (v, w) in m.row(u).iter().enumerate() {
            if v != u && member[v] && !terminal[v] && !w.is_zero() {
                indeg[v] += 1;
            }
        }
    }
    let mut queue: VecDeque<VertexId> = transient
        .iter()
        .copied()
        .filter(|&u| indeg[u] == 0)
        .collect();
    let mut order = Vec::with_capacity(transient.len());
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for (v, w) in m.row(u).iter().enumerate() {
            if v != u && member[v] && !w.is_zero() {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
    }
    (order.len() == transient.len()).then_some(order)
}

fn absorb_forward<W: Prob>(
    m: &StochasticMatrix<W>,
    v0: VertexId,
    terminal: &[bool],
    order: &[VertexId],
) -> VertexDistribution<W> {
    let d = m.dim;
    let mut mass = vec![W::zero(); d];
    mass[v0] = W::one();
    let mut out = vec![W::zero(); d];
    for &u in order {
        let here = core::mem::replace(&mut mass[u], W::zero());
        if here.is_zero() {
            continue;
        }
        // the self-loop only delays leaving
        let leave = W::one() - m.get(u, u).clone();
        let scale = here / leave;
        for (v, w) in m.row(u).iter().enumerate() {
            if v == u || w.is_zero() {
                continue;
            }
            let add = scale.times(w);
            if terminal[v] {
                out[v].add_in(&add);
            } else {
                mass[v].add_in(&add);
            }
        }
    }
    VertexDistribution::from_vec(out)
}

/// Expected visits `z` solve `z (I - Q) = e_{v0}`; absorbed mass at a
/// terminal `t` is `sum_u z_u M[u][t]`.
#[allow(clippy::needless_range_loop)]
fn absorb_solve<W: Prob>(
    m: &StochasticMatrix<W>,
    v0: VertexId,
    terminal: &[bool],
    transient: &[VertexId],
) -> Result<VertexDistribution<W>, DistError> {
    let k = transient.len();
    let mut index = vec![usize::MAX; m.dim];
    for (a, &u) in transient.iter().enumerate() {
        index[u] = a;
    }
    // augmented system A z = e, A = (I - Q)^T, columns 0..k plus rhs
    let mut a = vec![vec![W::zero(); k + 1]; k];
    for (col, &u) in transient.iter().enumerate() {
        for (row, &v) in transient.iter().enumerate() {
            let q = m.get(u, v).clone();
            let id = if u == v { W::one() } else { W::zero() };
            a[row][col] = id - q;
        }
    }
    a[index[v0]][k] = W::one();
    for col in 0..k {
        let pivot = (col..k)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&r, &s| {
                a[r][col]
                    .abs()
                    .partial_cmp(&a[s][col].abs())
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
            .ok_or(DistError::NonAbsorbing(transient[col]))?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for c in col..=k {
            a[col][c] = a[col][c].clone() / p.clone();
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=k {
                    let sub = f.times(&a[col][c]);
                    a[r][c] = a[r][c].clone() - sub;
                }
            }
        }
    }
    let mut out = vec![W::zero(); m.dim];
    for (row, &u) in transient.iter().enumerate() {
        let z = &a[row][k];
        if z.is_zero() {
            continue;
        }
        for (v, w) in m.row(u).iter().enumerate() {
            if terminal[v] && !w.is_zero() {
                out[v].add_in(&z.times(w));
            }
        }
    }
    Ok(VertexDistribution::from_vec(out))
}

/// Reads `count` bits from `stream` as a little-endian integer and keeps
/// drawing until the value is below `bound`. Exactly uniform on `0..bound`.
pub fn uniform_below<S: BitStream + ?Sized>(
    stream: &mut S,
    bound: u64,
) -> Result<u64, crate::bits::StreamExhausted> {
    let width = crate::bits::ceil_log2(bound) as usize;
    loop {
        let mut v = 0u64;
        for k in 0..width {
            if stream.next_bit()? {
                v |= 1 << k;
            }
        }
        if v < bound {
            return Ok(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::{random_program, ProgramShape};

    type Q = BigRational;

    fn q(n: u64, d: u64) -> Q {
        Q::from_ratio(n, d)
    }

    #[test]
    fn tvd_examples() {
        let a = VertexDistribution::<Q>::point(2, 0);
        let b = VertexDistribution::<Q>::point(2, 1);
        let u = VertexDistribution::from_vec(vec![q(1, 2), q(1, 2)]);
        assert_eq!(tvd(&a, &a).unwrap(), q(0, 1));
        assert_eq!(tvd(&a, &b).unwrap(), q(1, 1));
        assert_eq!(tvd(&u, &a).unwrap(), q(1, 2));
        assert!(tvd(&a, &VertexDistribution::point(3, 0)).is_err());
    }

    #[test]
    fn one_way_dp_matches_enumeration() {
        for seed in 0..40 {
            let p = random_program(
                ProgramShape {
                    n: 4,
                    m: 5,
                    width: 3,
                    depth: 4,
                    discipline: AccessDiscipline::ROw,
                },
                seed,
            )
            .unwrap();
            for xi in 0..16u64 {
                let mut x = vec![false; 4];
                fill_bits(&mut x, xi);
                let dp: VertexDistribution<Q> = exact_distribution(&p, 0, &x, 1 << 20).unwrap();
                let en: VertexDistribution<Q> = enumerate_distribution(&p, 0, &x, 1 << 20).unwrap();
                assert_eq!(dp, en, "seed {seed} x {xi}");
                assert!(dp.total().is_one());
            }
        }
    }

    #[test]
    fn single_random_read() {
        let p = Program::new(
            1,
            1,
            vec![
                Vertex::Nonterminal {
                    i: 0,
                    j: 0,
                    edges: [1, 2, 1, 2],
                },
                Vertex::Terminal { out: None },
                Vertex::Terminal { out: None },
            ],
            Some(0),
            None,
        )
        .unwrap();
        let d: VertexDistribution<Q> = exact_distribution(&p, 0, &[false], 16).unwrap();
        assert_eq!(d.as_slice(), [q(0, 1), q(1, 2), q(1, 2)]);
        let t: VertexDistribution<Q> = exact_distribution(&p, 1, &[false], 16).unwrap();
        assert_eq!(t, VertexDistribution::point(3, 1));
    }

    #[test]
    fn enumeration_cap() {
        let p = random_program(
            ProgramShape {
                n: 2,
                m: 12,
                width: 2,
                depth: 3,
                discipline: AccessDiscipline::SR,
            },
            3,
        )
        .unwrap();
        let r: Result<VertexDistribution<f64>, _> =
            exact_distribution(&p, 0, &[false, false], 1 << 10);
        assert!(matches!(r, Err(DistError::CapExceeded { .. })));
    }

    #[test]
    fn identity_matrix_power_and_closeness() {
        let i = StochasticMatrix::<Q>::identity(3);
        assert_eq!(matrix_power(&i, 5), i);
        assert_eq!(matrix_closeness(&i, &i).unwrap(), q(0, 1));
        let t: StochasticMatrix<Q> = transition_matrix(3, 4, 100, |u, _| u).unwrap();
        assert_eq!(t, i);
    }

    #[test]
    fn absorbing_examples() {
        // 0 -> 1 w.p. 1/3, 0 -> 2 w.p. 2/3
        let m = StochasticMatrix::from_rows(vec![
            vec![q(0, 1), q(1, 3), q(2, 3)],
            vec![q(0, 1), q(1, 1), q(0, 1)],
            vec![q(0, 1), q(0, 1), q(1, 1)],
        ])
        .unwrap();
        let term = [false, true, true];
        let d = absorbing_distribution(&m, 0, &term).unwrap();
        assert_eq!(d.as_slice(), [q(0, 1), q(1, 3), q(2, 3)]);
        assert_eq!(
            absorbing_distribution(&m, 1, &term).unwrap(),
            VertexDistribution::point(3, 1)
        );
    }

    #[test]
    fn non_absorbing_chain() {
        let m = StochasticMatrix::from_rows(vec![
            vec![q(1, 2), q(1, 2), q(0, 1)],
            vec![q(1, 2), q(1, 2), q(0, 1)],
            vec![q(0, 1), q(0, 1), q(1, 1)],
        ])
        .unwrap();
        let r = absorbing_distribution(&m, 0, &[false, false, true]);
        assert!(matches!(r, Err(DistError::NonAbsorbing(_))));
    }

    #[test]
    fn loop_chain_against_monte_carlo() {
        // 0 loops w.p. 1/2, moves to 1 w.p. 1/4, absorbs at 3 w.p. 1/4;
        // 1 returns to 0 w.p. 1/2, absorbs at 2 w.p. 1/2
        let m = StochasticMatrix::from_rows(vec![
            vec![q(1, 2), q(1, 4), q(0, 1), q(1, 4)],
            vec![q(1, 2), q(0, 1), q(1, 2), q(0, 1)],
            vec![q(0, 1), q(0, 1), q(1, 1), q(0, 1)],
            vec![q(0, 1), q(0, 1), q(0, 1), q(1, 1)],
        ])
        .unwrap();
        let term = [false, false, true, true];
        let exact = absorbing_distribution(&m, 0, &term).unwrap();
        // h0 = 1/4 h1 + 1/2 h0 (for target 2), h1 = 1/2 + 1/2 h0 -> h0 = 1/3
        assert_eq!(exact.as_slice(), [q(0, 1), q(0, 1), q(1, 3), q(2, 3)]);

        let sampled: VertexDistribution<f64> = sampled_distribution(4, 1_000_000, 0x5eed, |s| {
            let mut u = 0;
            while !term[u] {
                let r = s.take_u64(2).unwrap();
                u = match (u, r) {
                    (0, 0 | 1) => 0,
                    (0, 2) => 1,
                    (0, _) => 3,
                    (_, 0 | 1) => 0,
                    _ => 2,
                };
            }
            u
        });
        assert!(tvd(&sampled, &exact.to_f64()).unwrap() <= 0.005);
    }

    #[test]
    fn uniform_below_rejects() {
        let bits = [true, true, false, true, false, false];
        let mut s = crate::bits::SliceBitStream::new(&bits);
        // 3 >= 3 rejected, then 2
        assert_eq!(uniform_below(&mut s, 3).unwrap(), 2);
        assert_eq!(s.consumed(), 4);
    }
}
