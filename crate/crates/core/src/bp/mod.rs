//! Randomized branching programs.
//!
//! A program is a DAG over vertex ids `0..size`. Every nonterminal `v` reads
//! input bit `x[i(v)]` and random bit `y[j(v)]` and follows the edge labeled by
//! the pair. Indices are 0-based. Edge slot `2a + c` holds the target for
//! input bit `a` and random bit `c`.

mod random;

pub use random::{random_program, ProgramShape};

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_rational::BigRational;

pub type VertexId = usize;

/// Default bound on the number of evaluations an exhaustive loop may perform.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BpError {
    #[error("{what}: expected length {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("vertex {vertex}: {what} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        vertex: VertexId,
        what: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("vertex {0} out of range")]
    UnknownVertex(VertexId),
    #[error("vertex {vertex} has an edge to unknown vertex {target}")]
    DanglingEdge { vertex: VertexId, target: VertexId },
    #[error("edge relation has a cycle through vertex {0}")]
    Cycle(VertexId),
    #[error("program has no start vertex")]
    MissingStart,
    #[error("terminal {0} has no output bit")]
    MissingOutput(VertexId),
    #[error("restriction index {index} out of range (n = {n})")]
    RestrictionIndex { index: usize, n: usize },
    #[error("enumeration needs {needed} evaluations, cap is {cap}; use Monte-Carlo sampling")]
    CapExceeded { needed: u128, cap: u64 },
    #[error("program does not satisfy the {0:?} discipline")]
    Discipline(AccessDiscipline),
    #[error("infeasible shape: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessDiscipline {
    /// Random access to the input, one-way access to the random tape.
    ROw,
    /// Sequential input access, one-way random tape.
    SOw,
    /// Sequential input access, random access to the random tape.
    SR,
    Unrestricted,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Vertex {
    Terminal {
        out: Option<bool>,
    },
    Nonterminal {
        i: usize,
        j: usize,
        edges: [VertexId; 4],
    },
}

impl Vertex {
    pub fn is_terminal(&self) -> bool {
        matches!(self, Vertex::Terminal { .. })
    }

    /// `(i, j)` for nonterminals.
    pub fn indices(&self) -> Option<(usize, usize)> {
        match *self {
            Vertex::Nonterminal { i, j, .. } => Some((i, j)),
            Vertex::Terminal { .. } => None,
        }
    }
}

pub fn edge_slot(input_bit: bool, random_bit: bool) -> usize {
    2 * input_bit as usize + random_bit as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Halt {
    /// Reached a terminal of the program.
    Terminal,
    /// Stopped at a nonterminal whose input index is not allowed.
    Restricted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Walk {
    pub end: VertexId,
    pub steps: usize,
    pub halt: Halt,
}

/// A validated randomized branching program. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    n: usize,
    m: usize,
    vertices: Vec<Vertex>,
    start: Option<VertexId>,
    accept: Option<VertexId>,
    topo: Vec<VertexId>,
}

impl Program {
    /// Checks index ranges, edge targets and acyclicity.
    pub fn new(
        n: usize,
        m: usize,
        vertices: Vec<Vertex>,
        start: Option<VertexId>,
        accept: Option<VertexId>,
    ) -> Result<Self, BpError> {
        let size = vertices.len();
        for (v, vert) in vertices.iter().enumerate() {
            if let Vertex::Nonterminal { i, j, edges } = vert {
                if *i >= n {
                    return Err(BpError::IndexOutOfRange {
                        vertex: v,
                        what: "input",
                        index: *i,
                        bound: n,
                    });
                }
                if *j >= m {
                    return Err(BpError::IndexOutOfRange {
                        vertex: v,
                        what: "randomness",
                        index: *j,
                        bound: m,
                    });
                }
                if let Some(&t) = edges.iter().find(|&&t| t >= size) {
                    return Err(BpError::DanglingEdge {
                        vertex: v,
                        target: t,
                    });
                }
            }
        }
        for s in [start, accept].into_iter().flatten() {
            if s >= size {
                return Err(BpError::UnknownVertex(s));
            }
        }
        let topo = topological_order(&vertices)?;
        Ok(Program {
            n,
            m,
            vertices,
            start,
            accept,
            topo,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn size(&self) -> usize {
        self.vertices.len()
    }
    pub fn start(&self) -> Option<VertexId> {
        self.start
    }
    pub fn accept(&self) -> Option<VertexId> {
        self.accept
    }
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }
    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v]
    }
    pub fn is_terminal(&self, v: VertexId) -> bool {
        self.vertices[v].is_terminal()
    }

    /// Vertices in an order where every edge goes forward.
    pub fn topological_order(&self) -> &[VertexId] {
        &self.topo
    }

    pub fn require_start(&self) -> Result<VertexId, BpError> {
        self.start.ok_or(BpError::MissingStart)
    }

    fn check_vertex(&self, v: VertexId) -> Result<(), BpError> {
        if v < self.size() {
            Ok(())
        } else {
            Err(BpError::UnknownVertex(v))
        }
    }

    fn check_xy(&self, x: &[bool], y: &[bool]) -> Result<(), BpError> {
        if x.len() != self.n {
            return Err(BpError::Dimension {
                what: "input",
                expected: self.n,
                got: x.len(),
            });
        }
        if y.len() != self.m {
            return Err(BpError::Dimension {
                what: "randomness",
                expected: self.m,
                got: y.len(),
            });
        }
        Ok(())
    }

    /// Terminal reached from `v` on input `x` and random string `y`.
    pub fn eval(&self, v: VertexId, x: &[bool], y: &[bool]) -> Result<VertexId, BpError> {
        self.check_vertex(v)?;
        self.check_xy(x, y)?;
        Ok(self.walk(v, x, |j| y[j], |_| true).end)
    }

    /// Walks from `v`, reading random bits through `y` and halting at
    /// terminals or at nonterminals whose input index fails `allowed`.
    ///
    /// Lengths are not checked; `x` must cover every input index reached.
    pub fn walk<Y, A>(&self, v: VertexId, x: &[bool], mut y: Y, allowed: A) -> Walk
    where
        Y: FnMut(usize) -> bool,
        A: Fn(usize) -> bool,
    {
        let mut u = v;
        let mut steps = 0;
        loop {
            match self.vertices[u] {
                Vertex::Terminal { .. } => {
                    return Walk {
                        end: u,
                        steps,
                        halt: Halt::Terminal,
                    }
                }
                Vertex::Nonterminal { i, j, edges } => {
                    if !allowed(i) {
                        return Walk {
                            end: u,
                            steps,
                            halt: Halt::Restricted,
                        };
                    }
                    u = edges[edge_slot(x[i], y(j))];
                    steps += 1;
                }
            }
        }
    }

    /// `P|_I`: vertices reading outside `I` lose their out-edges.
    pub fn restrict(&self, set: &[usize]) -> Result<Program, BpError> {
        let mut member = vec![false; self.n];
        for &i in set {
            if i >= self.n {
                return Err(BpError::RestrictionIndex {
                    index: i,
                    n: self.n,
                });
            }
            member[i] = true;
        }
        Ok(self.restrict_by(|i| member[i]))
    }

    pub fn restrict_by(&self, allowed: impl Fn(usize) -> bool) -> Program {
        let vertices = self
            .vertices
            .iter()
            .map(|vert| match vert {
                Vertex::Nonterminal { i, .. } if !allowed(*i) => Vertex::Terminal { out: None },
                other => other.clone(),
            })
            .collect();
        Program {
            n: self.n,
            m: self.m,
            vertices,
            start: self.start,
            accept: self.accept,
            // deleting edges keeps any topological order valid
            topo: self.topo.clone(),
        }
    }

    /// Checks the index constraints on every edge between nonterminals.
    pub fn validate_discipline(&self, d: AccessDiscipline) -> bool {
        self.nonterminal_edges().all(|((i, j), (i2, j2))| {
            let one_way = j2 == j || j2 == j + 1;
            let sequential = i.abs_diff(i2) <= 1;
            match d {
                AccessDiscipline::ROw => one_way,
                AccessDiscipline::SOw => one_way && sequential,
                AccessDiscipline::SR => sequential,
                AccessDiscipline::Unrestricted => true,
            }
        })
    }

    fn nonterminal_edges(&self) -> impl Iterator<Item = ((usize, usize), (usize, usize))> + '_ {
        self.vertices.iter().flat_map(move |vert| {
            let (src, edges) = match vert {
                Vertex::Nonterminal { i, j, edges } => (Some((*i, *j)), *edges),
                Vertex::Terminal { .. } => (None, [0; 4]),
            };
            src.into_iter().flat_map(move |s| {
                edges
                    .into_iter()
                    .filter_map(move |t| self.vertices[t].indices().map(|d| (s, d)))
            })
        })
    }

    /// Longest path, counted in edges.
    pub fn length(&self) -> usize {
        let mut longest = vec![0usize; self.size()];
        for &v in self.topo.iter().rev() {
            if let Vertex::Nonterminal { edges, .. } = &self.vertices[v] {
                longest[v] = 1 + edges.iter().map(|&t| longest[t]).max().unwrap_or(0);
            }
        }
        longest.into_iter().max().unwrap_or(0)
    }

    /// One plus the largest number of input-index changes along a path of
    /// nonterminals; 0 when there are no nonterminals.
    pub fn queries(&self) -> usize {
        let mut q = vec![0usize; self.size()];
        for &v in self.topo.iter().rev() {
            if let Vertex::Nonterminal { i, edges, .. } = &self.vertices[v] {
                let mut best = 1;
                for &t in edges {
                    if let Some((i2, _)) = self.vertices[t].indices() {
                        best = best.max(q[t] + (i2 != *i) as usize);
                    }
                }
                q[v] = best;
            }
        }
        q.into_iter().max().unwrap_or(0)
    }

    pub fn output_bit(&self, v: VertexId) -> Result<bool, BpError> {
        match self.vertices[v] {
            Vertex::Terminal { out: Some(b) } => Ok(b),
            _ => Err(BpError::MissingOutput(v)),
        }
    }

    /// Output bit of the terminal reached from the start vertex.
    pub fn compute_boolean(&self, x: &[bool], y: &[bool]) -> Result<bool, BpError> {
        let v0 = self.require_start()?;
        let t = self.eval(v0, x, y)?;
        self.output_bit(t)
    }

    /// `max_x Pr_y[P(x, y) != f(x)]`, exactly, by enumerating every `(x, y)`.
    ///
    /// `truth[x]` is indexed by `x` read as a little-endian integer.
    pub fn failure_probability(&self, truth: &[bool], cap: u64) -> Result<BigRational, BpError> {
        let v0 = self.require_start()?;
        if truth.len() as u128 != 1u128 << self.n.min(127) {
            return Err(BpError::Dimension {
                what: "truth table",
                expected: 1usize.checked_shl(self.n as u32).unwrap_or(usize::MAX),
                got: truth.len(),
            });
        }
        let needed = 1u128 << (self.n + self.m).min(127);
        if needed > cap as u128 {
            return Err(BpError::CapExceeded { needed, cap });
        }
        let mut worst = 0u64;
        let mut x = vec![false; self.n];
        let mut y = vec![false; self.m];
        for (xi, &fx) in truth.iter().enumerate() {
            fill_bits(&mut x, xi as u64);
            let mut wrong = 0u64;
            for yi in 0..(1u64 << self.m) {
                fill_bits(&mut y, yi);
                let t = self.walk(v0, &x, |j| y[j], |_| true).end;
                if self.output_bit(t)? != fx {
                    wrong += 1;
                }
            }
            worst = worst.max(wrong);
        }
        Ok(BigRational::new(
            BigInt::from(worst),
            BigInt::from(1u64) << self.m,
        ))
    }

    /// Vertices reachable from `v` (including `v`), in increasing id order.
    pub fn reachable_from(&self, v: VertexId) -> Vec<VertexId> {
        let mut seen = vec![false; self.size()];
        let mut queue = VecDeque::from([v]);
        seen[v] = true;
        while let Some(u) = queue.pop_front() {
            if let Vertex::Nonterminal { edges, .. } = &self.vertices[u] {
                for &t in edges {
                    if !seen[t] {
                        seen[t] = true;
                        queue.push_back(t);
                    }
                }
            }
        }
        (0..self.size()).filter(|&u| seen[u]).collect()
    }

    /// True if every nonterminal that re-reads its predecessor's random bit
    /// ignores that bit.
    ///
    /// For one-way programs this makes each random bit that influences a walk
    /// a fresh one, so a walk can be cut at any vertex and resumed with new
    /// randomness without changing its law.
    pub fn is_fresh_read(&self) -> bool {
        self.vertices.iter().all(|vert| match vert {
            Vertex::Nonterminal { j, edges, .. } => edges.iter().all(|&t| match self.vertices[t] {
                Vertex::Nonterminal {
                    j: j2, edges: e2, ..
                } if j2 == *j => e2[0] == e2[1] && e2[2] == e2[3],
                _ => true,
            }),
            Vertex::Terminal { .. } => true,
        })
    }

    /// An equivalent program in fresh-read form.
    ///
    /// A nonterminal `u` that can be entered from a vertex reading the same
    /// random index gets two extra copies remembering the bit already seen.
    /// Walks correspond one-to-one: mapping the walk in the new program
    /// through `origin` gives the walk in `self` for every `(x, y)`.
    pub fn fresh_read_form(&self) -> FreshReadForm {
        let size = self.size();
        let mut rereads = vec![false; size];
        for vert in &self.vertices {
            if let Vertex::Nonterminal { j, edges, .. } = vert {
                for &t in edges {
                    if let Some((_, j2)) = self.vertices[t].indices() {
                        if j2 == *j {
                            rereads[t] = true;
                        }
                    }
                }
            }
        }
        // ids: fresh copy of u, then the two remembered-bit copies if needed
        let mut embed = vec![0; size];
        let mut known = vec![[usize::MAX; 2]; size];
        let mut origin = Vec::new();
        for u in 0..size {
            embed[u] = origin.len();
            origin.push(u);
            if rereads[u] {
                known[u] = [origin.len(), origin.len() + 1];
                origin.push(u);
                origin.push(u);
            }
        }
        let target = |u: VertexId, t: VertexId, bit: bool| -> VertexId {
            match (self.vertices[u].indices(), self.vertices[t].indices()) {
                (Some((_, j)), Some((_, j2))) if j == j2 => known[t][bit as usize],
                _ => embed[t],
            }
        };
        let mut vertices = Vec::with_capacity(origin.len());
        for (new, &u) in origin.iter().enumerate() {
            let vert = match &self.vertices[u] {
                Vertex::Terminal { out } => Vertex::Terminal { out: *out },
                Vertex::Nonterminal { i, j, edges } => {
                    let remembered = if new == embed[u] {
                        None
                    } else {
                        Some(new == known[u][1])
                    };
                    let mut e = [0; 4];
                    for a in [false, true] {
                        for c in [false, true] {
                            let bit = remembered.unwrap_or(c);
                            let t = edges[edge_slot(a, bit)];
                            e[edge_slot(a, c)] = target(u, t, bit);
                        }
                    }
                    Vertex::Nonterminal {
                        i: *i,
                        j: *j,
                        edges: e,
                    }
                }
            };
            vertices.push(vert);
        }
        let program = Program::new(
            self.n,
            self.m,
            vertices,
            self.start.map(|s| embed[s]),
            self.accept.map(|s| embed[s]),
        )
        .expect("fresh-read form of a valid program is valid");
        FreshReadForm {
            program,
            origin,
            embed,
        }
    }
}

/// Output of [`Program::fresh_read_form`].
#[derive(Debug, Clone)]
pub struct FreshReadForm {
    pub program: Program,
    /// Original vertex of every new vertex.
    pub origin: Vec<VertexId>,
    /// New vertex standing for an original vertex entered with no bit known.
    pub embed: Vec<VertexId>,
}

/// Writes the low `bits.len()` bits of `value` into `bits`, little-endian.
pub fn fill_bits(bits: &mut [bool], value: u64) {
    for (k, b) in bits.iter_mut().enumerate() {
        *b = k < 64 && (value >> k) & 1 == 1;
    }
}

fn topological_order(vertices: &[Vertex]) -> Result<Vec<VertexId>, BpError> {
    let size = vertices.len();
    let mut indeg = vec![0usize; size];
    for vert in vertices {
        if let Vertex::Nonterminal { edges, .. } = vert {
            for &t in edges {
                indeg[t] += 1;
            }
        }
    }
    let mut queue: VecDeque<VertexId> = (0..size).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(size);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        if let Vertex::Nonterminal { edges, .. } = &vertices[v] {
            for &t in edges {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    queue.push_back(t);
                }
            }
        }
    }
    if order.len() < size {
        let v = (0..size).find(|&v| indeg[v] > 0).unwrap_or(0);
        return Err(BpError::Cycle(v));
    }
    Ok(order)
}
