use bpderand_core::bits::{bits_from_u64, trial_stream};
use bpderand_core::bp::{random_program, AccessDiscipline, Program, ProgramShape, Vertex};
use bpderand_core::distribution::{
    absorbing_distribution, absorbing_distribution_solved, exact_distribution, transition_matrix,
    tvd, VertexDistribution,
};
use bpderand_core::field::frobenius::PolyRing;
use bpderand_core::field::FqElem;
use bpderand_core::gip::{generate_r, GipLayout};
use bpderand_core::simulator::{
    default_extractor, derive_parameters, Mode, SimulationConfig, Simulator,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

type Q = BigRational;

fn shape(
    n: usize,
    m: usize,
    width: usize,
    depth: usize,
    discipline: AccessDiscipline,
) -> ProgramShape {
    ProgramShape {
        n,
        m,
        width,
        depth,
        discipline,
    }
}

fn discipline() -> impl Strategy<Value = AccessDiscipline> {
    prop_oneof![
        Just(AccessDiscipline::ROw),
        Just(AccessDiscipline::SOw),
        Just(AccessDiscipline::SR),
        Just(AccessDiscipline::Unrestricted),
    ]
}

fn program() -> impl Strategy<Value = Program> {
    (
        1usize..8,
        1usize..6,
        1usize..4,
        1usize..7,
        discipline(),
        any::<u64>(),
    )
        .prop_map(|(n, m, w, d, disc, seed)| random_program(shape(n, m, w, d, disc), seed).unwrap())
}

fn distribution(size: usize) -> impl Strategy<Value = VertexDistribution<Q>> {
    prop::collection::vec(0u64..20, size).prop_map(|mut w| {
        if w.iter().all(|&c| c == 0) {
            w[0] = 1;
        }
        let total: u64 = w.iter().sum();
        VertexDistribution::from_vec(
            w.into_iter()
                .map(|c| Q::new(BigInt::from(c), BigInt::from(total)))
                .collect(),
        )
    })
}

/// Every edge between nonterminals moves to a strictly later coin.
fn reads_fresh_coins(p: &Program) -> bool {
    (0..p.size()).all(|u| match p.vertex(u) {
        Vertex::Terminal { .. } => true,
        Vertex::Nonterminal { j, edges, .. } => edges.iter().all(|&v| match p.vertex(v) {
            Vertex::Nonterminal { j: k, .. } => k > j,
            Vertex::Terminal { .. } => true,
        }),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn queries_never_exceed_length(p in program()) {
        prop_assert!(p.queries() <= p.length());
    }

    #[test]
    fn sequential_one_way_implies_both_weaker_disciplines(p in program()) {
        if p.validate_discipline(AccessDiscipline::SOw) {
            prop_assert!(p.validate_discipline(AccessDiscipline::SR));
            prop_assert!(p.validate_discipline(AccessDiscipline::ROw));
        }
    }

    #[test]
    fn full_restriction_is_identity(p in program(), x in any::<u64>(), y in any::<u64>()) {
        let all: Vec<usize> = (0..p.n()).collect();
        let q = p.restrict(&all).unwrap();
        let (x, y) = (bits_from_u64(x, p.n()), bits_from_u64(y, p.m()));
        for v in 0..p.size() {
            prop_assert_eq!(q.eval(v, &x, &y).unwrap(), p.eval(v, &x, &y).unwrap());
        }
    }

    #[test]
    fn tvd_is_a_metric(a in distribution(6), b in distribution(6), c in distribution(6)) {
        let ab = tvd(&a, &b).unwrap();
        prop_assert_eq!(&ab, &tvd(&b, &a).unwrap());
        prop_assert!(tvd(&a, &a).unwrap().is_zero());
        if a != b {
            prop_assert!(ab > Q::zero());
        }
        prop_assert!(ab <= tvd(&a, &c).unwrap() + tvd(&c, &b).unwrap());
    }

    #[test]
    fn exact_law_sums_to_one(p in program(), x in any::<u64>()) {
        let v0 = p.start().unwrap();
        let d: VertexDistribution<Q> = exact_distribution(&p, v0, &bits_from_u64(x, p.n()), 1 << 20).unwrap();
        prop_assert!(d.total().is_one());
    }

    #[test]
    fn absorbing_chain_matches_exact_law(n in 1usize..8, m in 1usize..6, w in 1usize..4, depth in 1usize..7,
                                         seed in any::<u64>(), x in any::<u64>()) {
        let p = random_program(shape(n, m, w, depth, AccessDiscipline::ROw), seed).unwrap();
        prop_assume!(reads_fresh_coins(&p));
        let x = bits_from_u64(x, n);
        // one random bit per step
        let chain = transition_matrix::<Q>(p.size(), 2, 1 << 20, |u, k| match p.vertex(u) {
            Vertex::Terminal { .. } => u,
            Vertex::Nonterminal { i, edges, .. } => edges[2 * usize::from(x[*i]) + k as usize],
        })
        .unwrap();
        let terminal: Vec<bool> = (0..p.size()).map(|v| p.is_terminal(v)).collect();
        let v0 = p.start().unwrap();
        let want: VertexDistribution<Q> = exact_distribution(&p, v0, &x, 1 << 20).unwrap();
        prop_assert_eq!(&absorbing_distribution(&chain, v0, &terminal).unwrap(), &want);
        prop_assert_eq!(&absorbing_distribution_solved(&chain, v0, &terminal).unwrap(), &want);
    }

    #[test]
    fn frobenius_is_additive(a in 0u32..2, b in 0u32..3, seed in any::<u128>(), t in 0u64..9) {
        let ring = PolyRing::new(a, b);
        let fq = *ring.field();
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(0x9e37_79b9);
            fq.from_u128(s)
        };
        let f: Vec<FqElem> = (0..ring.n()).map(|_| next()).collect();
        let h: Vec<FqElem> = (0..ring.n()).map(|_| next()).collect();
        prop_assert_eq!(
            ring.frobenius_power(&ring.add(&f, &h), t),
            ring.add(&ring.frobenius_power(&f, t), &ring.frobenius_power(&h, t))
        );
    }

    #[test]
    fn flipping_a_first_third_bit(n in 3usize..40, m in 1usize..4, x in any::<u64>(), pick in any::<usize>()) {
        prop_assume!(n / 3 / m >= 1);
        let layout = GipLayout::new(n, m).unwrap();
        let x = bits_from_u64(x, n);
        let j = pick % m;
        let off = (pick / m) % layout.ell;
        let p = layout.block(0, j).start + off;
        let mut flipped = x.clone();
        flipped[p] ^= true;
        let (r, r2) = (generate_r(&x, m).unwrap(), generate_r(&flipped, m).unwrap());
        let partners = x[layout.block(1, j).start + off] && x[layout.block(2, j).start + off];
        for k in 0..m {
            prop_assert_eq!(r[k] != r2[k], k == j && partners);
        }
    }
}

#[test]
fn one_way_disciplines_are_incomparable() {
    // reads x0 then x1 with random access to the tape: S_R, not R_OW
    let sr = Program::new(
        2,
        2,
        vec![
            Vertex::Nonterminal {
                i: 0,
                j: 1,
                edges: [1, 1, 1, 1],
            },
            Vertex::Nonterminal {
                i: 1,
                j: 0,
                edges: [2, 2, 2, 2],
            },
            Vertex::Terminal { out: Some(true) },
        ],
        Some(0),
        None,
    )
    .unwrap();
    assert!(sr.validate_discipline(AccessDiscipline::SR));
    assert!(!sr.validate_discipline(AccessDiscipline::ROw));
    // jumps from x2 to x0 with a one-way tape: R_OW, not S_R
    let row = Program::new(
        3,
        2,
        vec![
            Vertex::Nonterminal {
                i: 2,
                j: 0,
                edges: [1, 1, 1, 1],
            },
            Vertex::Nonterminal {
                i: 0,
                j: 1,
                edges: [2, 2, 2, 2],
            },
            Vertex::Terminal { out: Some(true) },
        ],
        Some(0),
        None,
    )
    .unwrap();
    assert!(row.validate_discipline(AccessDiscipline::ROw));
    assert!(!row.validate_discipline(AccessDiscipline::SR));
}

#[test]
fn h2_rarely_fails_to_absorb_at_the_derived_r() {
    let p = random_program(shape(160, 8, 4, 8, AccessDiscipline::ROw), 3).unwrap();
    let mut cfg = SimulationConfig::new(1, 8);
    cfg.block_size_override = Some(16);
    cfg.threshold_override = Some(16);
    cfg.prg_block = Some(2);
    let params = derive_parameters(&p, Mode::RandomAccess, &cfg).unwrap();
    let plan = params.plan.as_ref().unwrap();
    let r = plan.r;
    let ext = default_extractor(plan).unwrap();
    let sim = Simulator::with_parameters(&p, params.clone(), cfg, &ext).unwrap();
    let v0 = p.start().unwrap();
    let trials = 2000u64;
    let mut stuck = 0u64;
    for t in 0..trials {
        let x: Vec<bool> = (0..160)
            .map(|k| (t.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> (k % 64)) & 1 == 1)
            .collect();
        let out = sim.hybrid_h2(v0, &x, &mut trial_stream(77, t)).unwrap();
        stuck += u64::from(!out.trace.absorbed);
    }
    let bound = (-(r as f64) / 8.0).exp();
    let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
    let rate = stuck as f64 / trials as f64;
    assert!(
        rate <= bound + 3.0 * sigma,
        "r = {r}: {rate} > {bound} + 3 * {sigma}"
    );
}
