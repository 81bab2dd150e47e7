use alloc::format;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AccessDiscipline, BpError, Program, Vertex};

const MAX_VERTICES: usize = 1 << 20;

/// Shape of a generated layered program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProgramShape {
    pub n: usize,
    pub m: usize,
    pub width: usize,
    /// Number of nonterminal layers; every path has exactly this length.
    pub depth: usize,
    pub discipline: AccessDiscipline,
}

/// Generates a layered program obeying `shape.discipline`, deterministic in
/// `seed`.
///
/// Layer 0 is the start vertex, layers `1..depth` have `width` nonterminals
/// each and the last layer has `max(width, 2)` terminals with random output
/// bits. For one-way disciplines each layer shares one random index, which
/// repeats or advances by one with equal probability.
pub fn random_program(shape: ProgramShape, seed: u64) -> Result<Program, BpError> {
    let ProgramShape {
        n,
        m,
        width,
        depth,
        discipline,
    } = shape;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if depth == 0 {
        let out = rng.gen::<bool>();
        return Program::new(
            n,
            m,
            alloc::vec![Vertex::Terminal { out: Some(out) }],
            Some(0),
            None,
        );
    }
    if n == 0 || m == 0 {
        return Err(BpError::Infeasible(format!(
            "depth {depth} needs n >= 1 and m >= 1 (got n = {n}, m = {m})"
        )));
    }
    if depth > 1 && width == 0 {
        return Err(BpError::Infeasible("width 0 with depth > 1".into()));
    }
    let terminals = width.max(2);
    let total = 1 + (depth - 1).saturating_mul(width) + terminals;
    if total > MAX_VERTICES {
        return Err(BpError::Infeasible(format!(
            "{total} vertices exceeds cap {MAX_VERTICES}"
        )));
    }
    let one_way = matches!(discipline, AccessDiscipline::ROw | AccessDiscipline::SOw);
    let sequential = matches!(discipline, AccessDiscipline::SOw | AccessDiscipline::SR);

    // (i, j) for every nonterminal, layer by layer
    let mut layers: Vec<Vec<(usize, usize)>> = Vec::with_capacity(depth);
    let mut j_layer = 0usize;
    for t in 0..depth {
        let count = if t == 0 { 1 } else { width };
        if t > 0 && one_way && j_layer + 1 < m && rng.gen::<bool>() {
            j_layer += 1;
        }
        let mut layer = Vec::with_capacity(count);
        for k in 0..count {
            let i = if sequential && t > 0 {
                let prev = &layers[t - 1];
                let (pi, _) = prev[k % prev.len()];
                let lo = pi.saturating_sub(1);
                let hi = (pi + 1).min(n - 1);
                rng.gen_range(lo..=hi)
            } else {
                rng.gen_range(0..n)
            };
            let j = if one_way {
                j_layer
            } else {
                rng.gen_range(0..m)
            };
            layer.push((i, j));
        }
        layers.push(layer);
    }

    let mut offsets = Vec::with_capacity(depth + 1);
    let mut next_id = 0;
    for layer in &layers {
        offsets.push(next_id);
        next_id += layer.len();
    }
    let term_offset = next_id;

    let mut vertices = Vec::with_capacity(total);
    for t in 0..depth {
        for &(i, j) in &layers[t] {
            let mut edges = [0; 4];
            for e in edges.iter_mut() {
                *e = if t + 1 == depth {
                    term_offset + rng.gen_range(0..terminals)
                } else {
                    let next = &layers[t + 1];
                    let ok: Vec<usize> = (0..next.len())
                        .filter(|&k| !sequential || next[k].0.abs_diff(i) <= 1)
                        .collect();
                    offsets[t + 1] + ok[rng.gen_range(0..ok.len())]
                };
            }
            vertices.push(Vertex::Nonterminal { i, j, edges });
        }
    }
    for _ in 0..terminals {
        vertices.push(Vertex::Terminal {
            out: Some(rng.gen()),
        });
    }
    let p = Program::new(n, m, vertices, Some(0), None)?;
    debug_assert!(p.validate_discipline(discipline));
    debug_assert_eq!(p.length(), depth);
    Ok(p)
}
