//! Parallel trial loops. Trial `t` always uses stream `t` of the master
//! seed, and counts are summed, so results do not depend on scheduling.

use bpderand_core::bits::{trial_stream, RngBitStream};
use bpderand_core::distribution::{frequencies, Prob, VertexDistribution};
use bpderand_core::extractors::Extractor;
use bpderand_core::simulator::{SimError, Simulator, Variant};
use bpderand_core::VertexId;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Aggregates over a batch of simulation runs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceStats {
    pub trials: u64,
    pub phases: u64,
    pub max_phases: usize,
    pub absorbed: u64,
    pub restricted_reads: u64,
    pub bits: u64,
    /// Fewest steps taken by a phase that stopped at a restricted read.
    pub min_restricted_steps: Option<usize>,
}

impl TraceStats {
    fn merge(mut self, o: TraceStats) -> TraceStats {
        self.trials += o.trials;
        self.phases += o.phases;
        self.max_phases = self.max_phases.max(o.max_phases);
        self.absorbed += o.absorbed;
        self.restricted_reads += o.restricted_reads;
        self.bits += o.bits;
        self.min_restricted_steps = match (self.min_restricted_steps, o.min_restricted_steps) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self
    }
}

/// Vertex counts of `trials` independent runs.
pub fn sample_counts(
    size: usize,
    trials: u64,
    master_seed: u64,
    run: impl Fn(&mut RngBitStream<ChaCha8Rng>) -> VertexId + Sync,
) -> Vec<u64> {
    (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; size],
            |mut acc, t| {
                acc[run(&mut trial_stream(master_seed, t))] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; size],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Sampled output law of a simulator variant, with trace statistics.
pub fn sample_simulation<E: Extractor + Sync + ?Sized, W: Prob>(
    sim: &Simulator<'_, E>,
    variant: Variant,
    v0: VertexId,
    x: &[bool],
    trials: u64,
    master_seed: u64,
) -> Result<(VertexDistribution<W>, TraceStats), SimError> {
    let size = sim.program().size();
    let empty = || (vec![0u64; size], TraceStats::default());
    let (counts, stats) = (0..trials)
        .into_par_iter()
        .map(|t| sim.run(variant, v0, x, &mut trial_stream(master_seed, t)))
        .try_fold(empty, |(mut counts, stats), out| {
            let out = out?;
            counts[out.vertex] += 1;
            let tr = &out.trace;
            let restricted: Vec<usize> = tr
                .phases
                .iter()
                .filter(|p| p.halt == bpderand_core::simulator::PhaseHalt::RestrictedRead)
                .map(|p| p.steps)
                .collect();
            let one = TraceStats {
                trials: 1,
                phases: tr.phases.len() as u64,
                max_phases: tr.phases.len(),
                absorbed: tr.absorbed as u64,
                restricted_reads: restricted.len() as u64,
                bits: tr.bits as u64,
                min_restricted_steps: restricted.into_iter().min(),
            };
            Ok::<_, SimError>((counts, stats.merge(one)))
        })
        .try_reduce(empty, |(mut a, sa), (b, sb)| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            Ok((a, sa.merge(sb)))
        })?;
    Ok((frequencies(&counts), stats))
}
