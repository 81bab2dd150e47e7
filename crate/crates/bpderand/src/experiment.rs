//! Experiment orchestration: load instances, run one experiment kind, and
//! produce result files plus a manifest.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use bpderand_core::bits::{bits_from_u64, format_bitstring};
use bpderand_core::bp::{
    random_program, AccessDiscipline, Program, ProgramShape, DEFAULT_ENUMERATION_CAP,
};
use bpderand_core::distribution::{exact_distribution, tvd, Prob, VertexDistribution};
use bpderand_core::extractors::sampler::{
    flat_source_family, sampler_badset_count, verify_extractor,
};
use bpderand_core::extractors::{
    Extractor, GuvExtractor, HashExtractor, SeedIdentity, WalkExtractor, DEFAULT_MAX_TOWER,
};
use bpderand_core::field::frobenius::PolyRing;
use bpderand_core::field::irreducible::{binomial, check_irreducible, rabin_irreducible};
use bpderand_core::field::{F16Field, Field, FqField, G};
use bpderand_core::gip::{amplify_sow_to_sr, derandomize_sr, majority_truth};
use bpderand_core::prg::{nisan_fooling_tvd, NisanParams};
use bpderand_core::simulator::{
    default_extractor, Mode, Parameters, SimulationConfig, Simulator, Variant,
};
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{dump_config, ExperimentConfig, ExperimentKind};
use crate::format::{parse_program, ProbText};
use crate::montecarlo::sample_simulation;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Failed(#[from] anyhow::Error),
}

fn usage(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Usage(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub artifacts: Vec<Artifact>,
    /// Whether every check the experiment asserts held.
    pub passed: bool,
    pub summary: Value,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub program: Program,
}

pub fn parse_discipline(s: &str) -> Option<AccessDiscipline> {
    Some(match s.to_ascii_lowercase().as_str() {
        "r-ow" | "row" => AccessDiscipline::ROw,
        "s-ow" | "sow" => AccessDiscipline::SOw,
        "s-r" | "sr" => AccessDiscipline::SR,
        "any" | "unrestricted" => AccessDiscipline::Unrestricted,
        _ => return None,
    })
}

pub fn parse_variant(s: &str) -> Option<Variant> {
    Some(match s.to_ascii_uppercase().as_str() {
        "A" => Variant::A,
        "H1" => Variant::H1,
        "H2" => Variant::H2,
        "H3" => Variant::H3,
        _ => return None,
    })
}

pub fn load_program(path: &Path) -> anyhow::Result<Program> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_program(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_instances(
    cfg: &ExperimentConfig,
    base: &Path,
) -> Result<Vec<Instance>, ExperimentError> {
    let mut out = Vec::new();
    if let Some(list) = &cfg.instances {
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            out.push(Instance {
                name: name.to_string(),
                program: load_program(&base.join(name))?,
            });
        }
    }
    if let Some(count) = cfg.generate {
        let need =
            |v: Option<usize>, key: &str| v.ok_or_else(|| usage(format!("generate needs {key}")));
        let discipline = match &cfg.gen_discipline {
            Some(d) => {
                parse_discipline(d).ok_or_else(|| usage(format!("unknown discipline `{d}`")))?
            }
            None => AccessDiscipline::ROw,
        };
        let shape = ProgramShape {
            n: need(cfg.gen_n, "gen_n")?,
            m: need(cfg.gen_m, "gen_m")?,
            width: need(cfg.gen_width, "gen_width")?,
            depth: need(cfg.gen_depth, "gen_depth")?,
            discipline,
        };
        let first = cfg.gen_seed.unwrap_or(0);
        for k in 0..count as u64 {
            let seed = first + k;
            out.push(Instance {
                name: format!("gen-{seed}"),
                program: random_program(shape, seed).map_err(anyhow::Error::from)?,
            });
        }
    }
    if out.is_empty() {
        return Err(usage("empty instance list: set `instances` or `generate`"));
    }
    Ok(out)
}

/// Simulation settings from the experiment overrides.
pub fn simulation_config(cfg: &ExperimentConfig, p: &Program) -> SimulationConfig {
    let mut s = SimulationConfig::new(cfg.c.unwrap_or(1), cfg.t.unwrap_or(p.length().max(p.m())));
    s.r_override = cfg.r;
    s.block_size_override = cfg.block_size;
    s.threshold_override = cfg.threshold;
    s.prg_block = cfg.prg_block;
    if let Some(f) = cfg.h3_cap_factor {
        s.h3_cap_factor = f;
    }
    if let Some(t) = cfg.trials {
        s.trials = t;
    }
    s.master_seed = cfg.master_seed.unwrap_or(0);
    s
}

/// Hash extractor for a plan: defaults from [`default_extractor`], with
/// seed length, entropy and error taken from the overrides when given.
pub fn plan_extractor(
    params: &Parameters,
    seed_len: Option<usize>,
    k: Option<usize>,
    eps: Option<f64>,
) -> anyhow::Result<Box<dyn Extractor + Sync>> {
    let Some(plan) = &params.plan else {
        // direct simulation never calls the extractor
        return Ok(Box::new(SeedIdentity::new(1, 1, 1, 0.5)?));
    };
    if seed_len.is_none() && k.is_none() && eps.is_none() {
        return Ok(Box::new(default_extractor(plan)?));
    }
    let ell = plan.source_len();
    let s = plan.nisan.seed_len();
    let def = default_extractor(plan).ok();
    let eps = eps
        .or(def.as_ref().map(|e| e.spec().eps))
        .ok_or_else(|| anyhow!("set ext_eps"))?;
    Ok(Box::new(HashExtractor::new(
        ell,
        seed_len.unwrap_or(ell),
        s,
        k.unwrap_or(ell),
        eps,
    )?))
}

pub fn parameters_json(params: &Parameters, ext: &dyn Extractor) -> Value {
    let mut v = json!({
        "mode": format!("{:?}", params.mode),
        "n": params.n,
        "T": params.t,
        "S": params.space,
        "nominal_block": params.nominal_block,
        "threshold": params.threshold,
        "direct": params.is_direct(),
    });
    if let Some(plan) = &params.plan {
        let spec = ext.spec();
        v["B"] = json!(plan.num_blocks());
        v["block_size"] = json!(plan.block_size);
        v["blocks"] = json!(plan
            .blocks
            .iter()
            .map(|r| [r.start, r.end])
            .collect::<Vec<_>>());
        v["source_len"] = json!(plan.source_len());
        v["r"] = json!(plan.r);
        v["eps"] = json!(plan.eps);
        v["log2_eps"] = json!(plan.log2_eps);
        v["eps_prime"] = json!(plan.eps_prime);
        v["log2_eps_prime"] = json!(plan.log2_eps_prime);
        v["k"] = json!(plan.k);
        v["nisan"] = json!({
            "space": plan.nisan.space,
            "len": plan.nisan.len,
            "block": plan.nisan.block,
            "levels": plan.nisan.levels,
            "seed_len": plan.nisan.seed_len(),
        });
        v["extractor"] = json!({
            "kind": format!("{:?}", spec.kind),
            "ell": spec.ell,
            "d": spec.d,
            "s": spec.s,
            "k": spec.k,
            "eps": spec.eps,
        });
    }
    v
}

fn exact_mode(cfg: &ExperimentConfig) -> bool {
    cfg.arithmetic.as_deref() != Some("float")
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s.into_bytes()
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    base: &Path,
) -> Result<ExperimentResult, ExperimentError> {
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let (mut artifacts, passed, summary, parameters) = match cfg.kind {
        ExperimentKind::HybridCompare => hybrid_compare(cfg, base)?,
        ExperimentKind::MistakeRate => mistake_rate(cfg, base)?,
        ExperimentKind::ExtractorVerify => extractor_verify(cfg)?,
        ExperimentKind::FfVerify => ff_verify(cfg)?,
        ExperimentKind::PrgFool => prg_fool(cfg, base)?,
        ExperimentKind::AmplifyCheck => amplify_check(cfg, base)?,
    };
    artifacts.push(Artifact {
        name: "summary.json".into(),
        bytes: json_bytes(&summary),
    });
    let files: serde_json::Map<String, Value> = artifacts
        .iter()
        .map(|a| (a.name.clone(), Value::String(sha256_hex(&a.bytes))))
        .collect();
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind.name(),
        "config_sha256": sha256_hex(dump_config(cfg).as_bytes()),
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "master_seed": cfg.master_seed,
        "versions": { "bpderand": env!("CARGO_PKG_VERSION") },
        "parameters": parameters,
        "files": files,
    });
    artifacts.push(Artifact {
        name: "manifest.json".into(),
        bytes: json_bytes(&manifest),
    });
    Ok(ExperimentResult {
        artifacts,
        passed,
        summary,
    })
}

pub fn write_artifacts(dir: &Path, result: &ExperimentResult) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for a in &result.artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

type Outcome = (Vec<Artifact>, bool, Value, Value);

fn all_inputs(n: usize, limit: usize) -> Result<Vec<Vec<bool>>, ExperimentError> {
    if n > limit {
        return Err(usage(format!(
            "exhaustive loop over x needs n <= {limit}, got {n}"
        )));
    }
    Ok((0..1u64 << n).map(|x| bits_from_u64(x, n)).collect())
}

/// One side of a comparison: a simulator variant, or the exact law of the
/// program itself (`P`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Sim(Variant),
    Exact,
}

pub fn parse_side(s: &str) -> Option<Side> {
    if s.eq_ignore_ascii_case("p") {
        Some(Side::Exact)
    } else {
        parse_variant(s).map(Side::Sim)
    }
}

fn law<W: Prob>(
    sim: &Simulator<'_, dyn Extractor + Sync>,
    side: Side,
    v0: usize,
    x: &[bool],
    cfg: &ExperimentConfig,
) -> anyhow::Result<VertexDistribution<W>> {
    let cap = cfg.cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    match (side, cfg.trials) {
        (Side::Exact, _) => Ok(exact_distribution(sim.program(), v0, x, cap)?),
        (Side::Sim(v), Some(trials)) => {
            Ok(sample_simulation(sim, v, v0, x, trials, cfg.master_seed.unwrap_or(0))?.0)
        }
        (Side::Sim(v), None) => Ok(sim.exact_law(v, v0, x, cap)?),
    }
}

/// `inputs` random strings from the master seed, or every string when
/// `inputs` is unset and `n <= limit`.
fn inputs_for(
    n: usize,
    cfg: &ExperimentConfig,
    limit: usize,
) -> Result<Vec<Vec<bool>>, ExperimentError> {
    match cfg.inputs {
        Some(k) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed.unwrap_or(0));
            Ok((0..k)
                .map(|_| (0..n).map(|_| rng.gen()).collect())
                .collect())
        }
        None => all_inputs(n, limit),
    }
}

fn hybrid_compare(cfg: &ExperimentConfig, base: &Path) -> Result<Outcome, ExperimentError> {
    let pick = |s: &Option<String>, default: &str| {
        let s = s.as_deref().unwrap_or(default);
        parse_side(s).ok_or_else(|| usage(format!("unknown variant `{s}`")))
    };
    let (left, right) = (pick(&cfg.left, "A")?, pick(&cfg.right, "H1")?);
    let mode = if cfg.sequential.unwrap_or(false) {
        Mode::Sequential
    } else {
        Mode::RandomAccess
    };
    let threshold = cfg.bad_threshold.unwrap_or(0.1);
    let exact = exact_mode(cfg) && cfg.trials.is_none();
    let mut csv = String::from("instance,x,tvd,bad_flag\n");
    let mut per_instance = Vec::new();
    let mut parameters = Vec::new();
    let mut passed = true;
    for inst in load_instances(cfg, base)? {
        let p = &inst.program;
        let v0 = p.require_start().map_err(anyhow::Error::from)?;
        let scfg = simulation_config(cfg, p);
        let params = bpderand_core::simulator::derive_parameters(p, mode, &scfg)
            .map_err(anyhow::Error::from)?;
        let ext = plan_extractor(&params, cfg.ext_seed_len, cfg.ext_k, cfg.ext_eps)?;
        parameters.push(
            json!({ "instance": inst.name, "parameters": parameters_json(&params, ext.as_ref()) }),
        );
        let sim = Simulator::with_parameters(p, params, scfg, ext.as_ref())
            .map_err(anyhow::Error::from)?;
        let rows: Vec<(String, String, f64)> = inputs_for(p.n(), cfg, 16)?
            .par_iter()
            .map(|x| -> anyhow::Result<_> {
                let (text, value) = if exact {
                    let a: VertexDistribution<BigRational> = law(&sim, left, v0, x, cfg)?;
                    let b: VertexDistribution<BigRational> = law(&sim, right, v0, x, cfg)?;
                    let d = tvd(&a, &b)?;
                    (d.prob_text(), Prob::to_f64(&d))
                } else {
                    let a: VertexDistribution<f64> = law(&sim, left, v0, x, cfg)?;
                    let b: VertexDistribution<f64> = law(&sim, right, v0, x, cfg)?;
                    let d = tvd(&a, &b)?;
                    (d.prob_text(), d)
                };
                Ok((format_bitstring(x), text, value))
            })
            .collect::<anyhow::Result<_>>()?;
        let mut bad = 0u64;
        let mut max = 0.0f64;
        for (x, text, value) in &rows {
            let flag = *value > threshold;
            bad += flag as u64;
            max = max.max(*value);
            writeln!(csv, "{},{x},{text},{}", inst.name, flag as u8).unwrap();
        }
        if cfg.max_bad.is_some_and(|m| bad > m) {
            passed = false;
        }
        per_instance.push(json!({
            "instance": inst.name,
            "inputs": rows.len(),
            "bad_count": bad,
            "max_tvd": max,
        }));
    }
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind.name(),
        "left": cfg.left.as_deref().unwrap_or("A"),
        "right": cfg.right.as_deref().unwrap_or("H1"),
        "bad_threshold": threshold,
        "instances": per_instance,
        "passed": passed,
    });
    let art = Artifact {
        name: "hybrid-compare.csv".into(),
        bytes: csv.into_bytes(),
    };
    Ok((vec![art], passed, summary, Value::Array(parameters)))
}

fn bound_template(n: usize, m: usize) -> String {
    format!("3*delta + {m}*2^(-alpha*{n}/{m})")
}

/// Mistake table of the deterministic coin generator against `truth`:
/// CSV rows `instance,x,f,p_r,mismatch` and a summary object.
pub fn mistake_report(
    name: &str,
    p: &Program,
    truth: &[bool],
    cap: u64,
) -> anyhow::Result<(String, Value)> {
    if truth.len() as u64 != 1u64 << p.n() {
        bail!(
            "truth table has {} entries, expected 2^{}",
            truth.len(),
            p.n()
        );
    }
    let got: Vec<bool> = (0..truth.len())
        .into_par_iter()
        .map(|xi| derandomize_sr(p, &bits_from_u64(xi as u64, p.n())))
        .collect::<Result<_, _>>()?;
    let mut csv = String::new();
    let mut mistakes = 0u64;
    for (xi, (&f, &g)) in truth.iter().zip(&got).enumerate() {
        mistakes += (f != g) as u64;
        let x = format_bitstring(&bits_from_u64(xi as u64, p.n()));
        writeln!(csv, "{name},{x},{},{},{}", f as u8, g as u8, (f != g) as u8).unwrap();
    }
    let delta = p.failure_probability(truth, cap)?;
    let summary = json!({
        "instance": name,
        "n": p.n(),
        "m": p.m(),
        "inputs": truth.len(),
        "mistakes": mistakes,
        "mistake_density": mistakes as f64 / truth.len() as f64,
        "delta_measured": delta.prob_text(),
        "bound_template": bound_template(p.n(), p.m()),
    });
    Ok((csv, summary))
}

pub const MISTAKE_CSV_HEADER: &str = "instance,x,f,p_r,mismatch\n";

fn mistake_rate(cfg: &ExperimentConfig, base: &Path) -> Result<Outcome, ExperimentError> {
    let cap = cfg.cap.unwrap_or(1 << 26);
    let mut csv = String::from(MISTAKE_CSV_HEADER);
    let mut per_instance = Vec::new();
    let mut passed = true;
    for inst in load_instances(cfg, base)? {
        let p = &inst.program;
        let truth = majority_truth(p, cap).map_err(anyhow::Error::from)?;
        let (rows, summary) = mistake_report(&inst.name, p, &truth, cap)?;
        csv.push_str(&rows);
        if cfg
            .max_density
            .is_some_and(|m| summary["mistake_density"].as_f64().unwrap_or(1.0) > m)
        {
            passed = false;
        }
        per_instance.push(summary);
    }
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind.name(),
        "instances": per_instance,
        "passed": passed,
    });
    let art = Artifact {
        name: "mistake-rate.csv".into(),
        bytes: csv.into_bytes(),
    };
    Ok((vec![art], passed, summary, Value::Null))
}

/// Extractor named by `kind` with the given sizes.
pub fn build_extractor(
    kind: &str,
    ell: usize,
    k: usize,
    eps: f64,
    seed_len: Option<usize>,
    out: Option<usize>,
    alpha: Option<f64>,
) -> anyhow::Result<Box<dyn Extractor + Sync>> {
    Ok(match kind {
        "hash" => {
            let d = seed_len.unwrap_or(ell);
            let s = match out {
                Some(s) => s,
                None => (k as f64 - 2.0 * (1.0 / eps).log2() + 1e-9)
                    .floor()
                    .max(0.0) as usize,
            };
            Box::new(HashExtractor::new(ell, d, s, k, eps)?)
        }
        "walk" => match (seed_len, out) {
            (Some(t), Some(s)) => Box::new(WalkExtractor::new(ell, s, t, k, eps)?),
            _ => Box::new(WalkExtractor::for_rate(ell, alpha.unwrap_or(0.25), k, eps)?),
        },
        "guv" => Box::new(GuvExtractor::new(
            ell,
            k,
            eps,
            alpha.unwrap_or(0.25),
            DEFAULT_MAX_TOWER,
        )?),
        other => bail!("unknown extractor kind `{other}`"),
    })
}

fn dyadic(eps: f64, scale: u64) -> Ratio<u64> {
    const BITS: u32 = 20;
    Ratio::new(
        (eps * (1u64 << BITS) as f64).round() as u64 * scale,
        1 << (BITS + 1),
    )
}

/// Flat-source verification and sampler bad-set counts for one extractor.
pub fn extractor_report(
    ext: &dyn Extractor,
    family: usize,
    functions: usize,
    values: usize,
    seed: u64,
    cap: u64,
) -> anyhow::Result<(Value, bool)> {
    let spec = *ext.spec();
    let fam = flat_source_family(spec.ell, spec.k, family, seed);
    let eps = BigRational::new(
        BigInt::from((spec.eps * (1u64 << 30) as f64).round() as u64),
        BigInt::from(1u64 << 30),
    );
    let v = verify_extractor(&ext, &fam, &eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a);
    let bound = (1u64 << (spec.k + 1)) * values as u64;
    let delta = dyadic(spec.eps, values as u64);
    let mut counts = Vec::new();
    for _ in 0..functions {
        let f: Vec<usize> = (0..1usize << spec.s)
            .map(|_| rng.gen_range(0..values))
            .collect();
        counts.push(sampler_badset_count(&ext, &f, values, delta, cap)?);
    }
    let ok = v.verified && counts.iter().all(|&c| c <= bound);
    let report = json!({
        "params": {
            "kind": format!("{:?}", spec.kind),
            "ell": spec.ell,
            "d": spec.d,
            "s": spec.s,
            "k": spec.k,
            "eps": spec.eps,
            "family": family,
            "values": values,
            "delta": format!("{}/{}", delta.numer(), delta.denom()),
        },
        "verified": v.verified,
        "max_tvd": v.max_tvd.prob_text(),
        "badset_count": counts,
        "bound": bound,
    });
    Ok((report, ok))
}

fn extractor_verify(cfg: &ExperimentConfig) -> Result<Outcome, ExperimentError> {
    let ell = cfg
        .ext_ell
        .ok_or_else(|| usage("extractor-verify needs ext_ell"))?;
    let k = cfg
        .ext_k
        .ok_or_else(|| usage("extractor-verify needs ext_k"))?;
    let eps = cfg
        .ext_eps
        .ok_or_else(|| usage("extractor-verify needs ext_eps"))?;
    let ext = build_extractor(
        cfg.ext_kind.as_deref().unwrap_or("hash"),
        ell,
        k,
        eps,
        cfg.ext_seed_len,
        cfg.ext_out,
        cfg.ext_alpha,
    )?;
    let (mut report, ok) = extractor_report(
        ext.as_ref(),
        cfg.family.unwrap_or(20),
        cfg.functions.unwrap_or(10),
        cfg.values.unwrap_or(2),
        cfg.master_seed.unwrap_or(0),
        cfg.cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
    )?;
    report["schema_version"] = json!(SCHEMA_VERSION);
    report["kind"] = json!(cfg.kind.name());
    report["passed"] = json!(ok);
    Ok((vec![], ok, report, Value::Null))
}

/// One row of the field verification table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FfRow {
    pub check: &'static str,
    pub a: u32,
    pub b: u32,
    pub cases: usize,
    pub failures: usize,
}

/// Frobenius powering against repeated squaring, the identities of `x`,
/// and irreducibility of the tower moduli.
pub fn ff_table(samples: usize, seed: u64) -> anyhow::Result<Vec<FfRow>> {
    let mut rows = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for a in [0u32, 1] {
        for b in [0u32, 1, 2] {
            let r = PolyRing::new(a, b);
            let fq = *r.field();
            let width = fq.bits();
            let mut failures = 0;
            for _ in 0..samples {
                let f: Vec<_> = (0..r.n())
                    .map(|_| fq.from_u128(rng.gen::<u128>() & ((1u128 << width) - 1)))
                    .collect();
                let t = rng.gen_range(0..64u64);
                failures += (r.frobenius_power(&f, t) != r.square_repeatedly(&f, t)) as usize;
            }
            rows.push(FfRow {
                check: "frobenius_power",
                a,
                b,
                cases: samples,
                failures,
            });
            let x = r.x();
            let n = r.n() as u128;
            let bad = (r.pow(&x, n) != r.constant(G.pow(5))) as usize
                + (r.pow(&x, 3 * n) != r.one()) as usize;
            rows.push(FfRow {
                check: "x_identities",
                a,
                b,
                cases: 2,
                failures: bad,
            });
        }
    }
    let f16 = F16Field;
    for a in [0u32, 1, 2] {
        let p = binomial(&f16, 5usize.pow(a), G.pow(3));
        let ok = check_irreducible(&f16, &p)? && rabin_irreducible(&f16, &p);
        rows.push(FfRow {
            check: "tower_modulus_irreducible",
            a,
            b: 0,
            cases: 1,
            failures: (!ok) as usize,
        });
    }
    for a in [0u32, 1] {
        let fq = FqField::new(a);
        for b in [0u32, 1, 2] {
            let p = binomial(&fq, 3usize.pow(b), fq.embed(G.pow(5)));
            let ok = check_irreducible(&fq, &p)? && rabin_irreducible(&fq, &p);
            rows.push(FfRow {
                check: "ring_modulus_irreducible",
                a,
                b,
                cases: 1,
                failures: (!ok) as usize,
            });
        }
    }
    Ok(rows)
}

pub fn ff_csv(rows: &[FfRow]) -> String {
    let mut csv = String::from("check,a,b,cases,failures\n");
    for r in rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            r.check, r.a, r.b, r.cases, r.failures
        )
        .unwrap();
    }
    csv
}

fn ff_verify(cfg: &ExperimentConfig) -> Result<Outcome, ExperimentError> {
    let rows = ff_table(cfg.ff_samples.unwrap_or(100), cfg.master_seed.unwrap_or(0))?;
    let failures: usize = rows.iter().map(|r| r.failures).sum();
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind.name(),
        "checks": rows.len(),
        "failures": failures,
        "passed": failures == 0,
    });
    let art = Artifact {
        name: "ff-verify.csv".into(),
        bytes: ff_csv(&rows).into_bytes(),
    };
    Ok((vec![art], failures == 0, summary, Value::Null))
}

fn prg_fool(cfg: &ExperimentConfig, base: &Path) -> Result<Outcome, ExperimentError> {
    let cap = cfg.cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    let space = cfg
        .prg_space
        .ok_or_else(|| usage("prg-fool needs prg_space"))?;
    let len = cfg.prg_len.ok_or_else(|| usage("prg-fool needs prg_len"))?;
    let eps = cfg.prg_eps.ok_or_else(|| usage("prg-fool needs prg_eps"))?;
    let nisan = match cfg.prg_block {
        Some(w) => NisanParams::with_block(space, len, eps, w),
        None => NisanParams::new(space, len, eps),
    }
    .map_err(anyhow::Error::from)?;
    let mut csv = String::from("instance,x,tvd\n");
    let mut worst = 0.0f64;
    let mut per_instance = Vec::new();
    for inst in load_instances(cfg, base)? {
        let p = &inst.program;
        let v0 = p.require_start().map_err(anyhow::Error::from)?;
        let xs = inputs_for(p.n(), cfg, 8)?;
        let mut max = 0.0f64;
        for x in &xs {
            let d: BigRational =
                nisan_fooling_tvd(p, v0, x, &nisan, cap).map_err(anyhow::Error::from)?;
            let f = Prob::to_f64(&d);
            max = max.max(f);
            writeln!(
                csv,
                "{},{},{}",
                inst.name,
                format_bitstring(x),
                d.prob_text()
            )
            .unwrap();
        }
        worst = worst.max(max);
        per_instance.push(json!({ "instance": inst.name, "inputs": xs.len(), "max_tvd": max }));
    }
    let passed = worst <= eps;
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind.name(),
        "eps": eps,
        "max_tvd": worst,
        "instances": per_instance,
        "passed": passed,
    });
    let params = json!({
        "space": nisan.space,
        "len": nisan.len,
        "block": nisan.block,
        "levels": nisan.levels,
        "seed_len": nisan.seed_len(),
    });
    let art = Artifact {
        name: "prg-fool.csv".into(),
        bytes: csv.into_bytes(),
    };
    Ok((vec![art], passed, summary, params))
}

fn amplify_check(cfg: &ExperimentConfig, base: &Path) -> Result<Outcome, ExperimentError> {
    let cap = cfg.cap.unwrap_or(1 << 24);
    let delta = cfg
        .delta
        .ok_or_else(|| usage("amplify-check needs delta"))?;
    let instances = load_instances(cfg, base)?;
    let mut per_instance = Vec::new();
    let mut passed = true;
    for inst in &instances {
        let p = &inst.program;
        let len = cfg.prg_len.unwrap_or(p.m().max(p.length()));
        let space = cfg
            .prg_space
            .unwrap_or(bpderand_core::bits::ceil_log2(len as u64).max(1) as usize);
        let nisan = match cfg.prg_block {
            Some(w) => NisanParams::with_block(space, len, cfg.prg_eps.unwrap_or(0.25), w),
            None => NisanParams::new(space, len, cfg.prg_eps.unwrap_or(0.25)),
        }
        .map_err(anyhow::Error::from)?;
        let truth = majority_truth(p, cap).map_err(anyhow::Error::from)?;
        let inner = p
            .failure_probability(&truth, cap)
            .map_err(anyhow::Error::from)?;
        let amp = amplify_sow_to_sr(p, delta, cfg.rounds, &nisan, 1 << 24)
            .map_err(anyhow::Error::from)?;
        let q = &amp.program;
        let failure = q
            .failure_probability(&truth, cap)
            .map_err(anyhow::Error::from)?;
        let discipline = q.validate_discipline(AccessDiscipline::SR);
        let size_ok = q.size() as u128 == amp.predicted_size;
        let queries_ok = q.queries() <= amp.rounds * (p.queries() + p.n());
        let ok = Prob::to_f64(&failure) <= delta && discipline && size_ok && queries_ok;
        passed &= ok;
        per_instance.push(json!({
            "instance": inst.name,
            "inner_failure": inner.prob_text(),
            "rounds": amp.rounds,
            "seed_len": amp.seed_len,
            "label_bits": amp.label_bits,
            "coins": q.m(),
            "size": q.size(),
            "predicted_size": amp.predicted_size.to_string(),
            "failure": failure.prob_text(),
            "failure_f64": Prob::to_f64(&failure),
            "discipline_s_r": discipline,
            "queries": q.queries(),
            "queries_bound": amp.rounds * (p.queries() + p.n()),
            "passed": ok,
        }));
    }
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind.name(),
        "delta": delta,
        "instances": per_instance,
        "passed": passed,
    });
    Ok((vec![], passed, summary, Value::Null))
}
