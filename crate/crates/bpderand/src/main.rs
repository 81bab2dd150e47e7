use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use bpderand::config::{load_config, ExperimentConfig, ExperimentKind};
use bpderand::experiment::{
    build_extractor, extractor_report, ff_csv, ff_table, load_program, mistake_report,
    parameters_json, parse_discipline, parse_variant, plan_extractor, run_experiment,
    simulation_config, write_artifacts, ExperimentError, MISTAKE_CSV_HEADER,
};
use bpderand::format::{distribution_json, serialize_bp, serialize_bp_json, ProbText};
use bpderand_core::bits::{
    bits_to_bytes, bytes_to_bits, format_bitstring, parse_bitstring, trial_stream,
};
use bpderand_core::bp::{
    random_program, AccessDiscipline, Program, ProgramShape, DEFAULT_ENUMERATION_CAP,
};
use bpderand_core::distribution::{exact_distribution, Prob, VertexDistribution};
use bpderand_core::gip::{generate_r, majority_truth};
use bpderand_core::prg::{nisan_output, nz_generate, NisanParams, NzParams};
use bpderand_core::simulator::{derive_parameters, Mode, Simulator, Variant};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "bpderand",
    version,
    about = "Derandomization of space-bounded branching programs at desk scale"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed (decimal or 0x-prefixed hex).
    #[arg(long, global = true, value_parser = parse_u64)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Exact rational arithmetic (default).
    #[arg(long, global = true, conflicts_with = "float")]
    exact: bool,
    /// Floating-point arithmetic.
    #[arg(long, global = true)]
    float: bool,
    /// Cap on exhaustive enumeration sizes.
    #[arg(long, global = true)]
    cap: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and report its shape and access disciplines.
    Validate {
        #[arg(long)]
        bp: PathBuf,
        /// Fail with exit code 2 unless the program obeys this discipline.
        #[arg(long)]
        discipline: Option<String>,
    },
    /// Evaluate a program on x, on a given tape or exactly over all tapes.
    Eval {
        #[arg(long)]
        bp: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: Option<String>,
        #[arg(long)]
        v0: Option<usize>,
    },
    /// Run the simulator or one of its hybrids.
    Simulate {
        #[arg(long)]
        bp: PathBuf,
        #[arg(long)]
        x: String,
        /// A, H1, H2, H3, or SOW (sequential A); `--sequential` applies the
        /// sequential plan to the hybrids.
        #[arg(long, default_value = "A")]
        mode: String,
        #[arg(long)]
        sequential: bool,
        /// Monte-Carlo trials; without it the exact law is computed.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, value_parser = parse_u64)]
        master_seed: Option<u64>,
        /// Comma-separated `key=value` list: c, t, r, block, threshold,
        /// prg-block, h3-cap, ext-seed, ext-k, ext-eps.
        #[arg(long = "override")]
        overrides: Option<String>,
    },
    /// Per-input TVD between two simulator variants (`P` is the exact law).
    HybridCompare {
        #[arg(long, required = true)]
        bp: Vec<PathBuf>,
        #[arg(long, default_value = "A")]
        left: String,
        #[arg(long, default_value = "H1")]
        right: String,
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        trials: Option<u64>,
        /// Random inputs to draw; every input when absent.
        #[arg(long)]
        inputs: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        bad_threshold: f64,
        #[arg(long = "override")]
        overrides: Option<String>,
    },
    /// Verify an extractor on flat sources and count sampler bad sets.
    ExtractorTest {
        #[arg(long, default_value = "hash")]
        kind: String,
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        seed_len: Option<usize>,
        #[arg(long)]
        out: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 20)]
        family: usize,
        /// Also count sampler bad sets for random test functions.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 50)]
        functions: usize,
        #[arg(long, default_value_t = 2)]
        values: usize,
    },
    /// Expand a seed with a generator and print the output in hex.
    Prg {
        #[arg(long, value_enum, default_value_t = PrgKind::Nisan)]
        kind: PrgKind,
        /// Seed bytes in hex, bits least significant first.
        #[arg(long)]
        seed_hex: String,
        #[arg(long)]
        len: usize,
        #[arg(long)]
        space: Option<usize>,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[arg(long)]
        block: Option<usize>,
        #[arg(long)]
        source_len: Option<usize>,
        #[arg(long)]
        call_seed: Option<usize>,
        #[arg(long)]
        out_per_call: Option<usize>,
        #[arg(long)]
        calls: Option<usize>,
    },
    /// Deterministic coins R(x) in hex.
    Gip {
        #[arg(long)]
        x: String,
        #[arg(long)]
        m: usize,
    },
    /// Mistake table of the deterministic coin generator.
    DerandSr {
        #[arg(long)]
        bp: PathBuf,
        /// Truth table as a 0/1 string indexed by x; majority vote if absent.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Accepted for clarity; the table always covers every x.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_density: Option<f64>,
    },
    /// Finite-field verification table.
    FfTest {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Run an experiment config and write its results.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random program.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value = "r-ow")]
        discipline: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrgKind {
    Nisan,
    Nz,
}

enum Failure {
    Usage(String),
    Check(String),
    Error(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Error(e)
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Usage(m) => Failure::Usage(m),
            ExperimentError::Failed(e) => Failure::Error(e),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_u64(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    }
    .map_err(|e| e.to_string())
}

fn bits_arg(s: &str, what: &str) -> Result<Vec<bool>, Failure> {
    parse_bitstring(s).ok_or_else(|| usage(format!("{what} must be a 0/1 string")))
}

fn print_json(v: &Value) {
    use std::io::Write;
    // a closed pipe downstream is not an error worth reporting
    let _ = writeln!(
        std::io::stdout(),
        "{}",
        serde_json::to_string_pretty(v).expect("values serialize")
    );
}

fn apply_overrides(cfg: &mut ExperimentConfig, list: Option<&str>) -> Result<(), Failure> {
    for item in list
        .unwrap_or("")
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
    {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("override `{item}` is not key=value")))?;
        let int = || {
            v.parse::<usize>()
                .map_err(|_| usage(format!("override {k} needs an integer")))
        };
        match k {
            "c" => cfg.c = Some(int()? as u32),
            "t" => cfg.t = Some(int()?),
            "r" => cfg.r = Some(int()?),
            "block" => cfg.block_size = Some(int()?),
            "threshold" => cfg.threshold = Some(int()?),
            "prg-block" => cfg.prg_block = Some(int()?),
            "h3-cap" => cfg.h3_cap_factor = Some(int()?),
            "ext-seed" => cfg.ext_seed_len = Some(int()?),
            "ext-k" => cfg.ext_k = Some(int()?),
            "ext-eps" | "eps" => {
                cfg.ext_eps = Some(
                    v.parse()
                        .map_err(|_| usage(format!("override {k} needs a number")))?,
                )
            }
            _ => return Err(usage(format!("unknown override `{k}`"))),
        }
    }
    Ok(())
}

fn distribution_csv<W: Prob + ProbText>(d: &VertexDistribution<W>) -> String {
    let mut s = String::from("vertex,probability\n");
    for (v, p) in d.support() {
        s.push_str(&format!("{v},{}\n", p.prob_text()));
    }
    s
}

fn emit_distribution<W: Prob + ProbText>(g: &Global, d: &VertexDistribution<W>, mut doc: Value) {
    match g.format {
        OutFormat::Csv => print!("{}", distribution_csv(d)),
        OutFormat::Json => {
            doc["distribution"] = distribution_json(d);
            print_json(&doc);
        }
    }
}

fn start_vertex(p: &Program, v0: Option<usize>) -> Result<usize, Failure> {
    match v0 {
        Some(v) => Ok(v),
        None => Ok(p.require_start().map_err(anyhow::Error::from)?),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    let cap = g.cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    match cli.cmd {
        Command::Validate { bp, discipline } => {
            let want = match &discipline {
                Some(d) => Some(
                    parse_discipline(d)
                        .ok_or_else(|| usage(format!("unknown discipline `{d}`")))?,
                ),
                None => None,
            };
            let p = load_program(&bp).map_err(|e| Failure::Check(format!("{e:#}")))?;
            let check = |d| p.validate_discipline(d);
            print_json(&json!({
                "valid": true,
                "n": p.n(),
                "m": p.m(),
                "size": p.size(),
                "length": p.length(),
                "queries": p.queries(),
                "start": p.start(),
                "accept": p.accept(),
                "disciplines": {
                    "r-ow": check(AccessDiscipline::ROw),
                    "s-ow": check(AccessDiscipline::SOw),
                    "s-r": check(AccessDiscipline::SR),
                },
            }));
            if let (Some(d), Some(name)) = (want, &discipline) {
                if !p.validate_discipline(d) {
                    return Err(Failure::Check(format!("program violates {name}")));
                }
            }
        }
        Command::Eval { bp, x, y, v0 } => {
            let p = load_program(&bp)?;
            let x = bits_arg(&x, "--x")?;
            let v0 = start_vertex(&p, v0)?;
            match y {
                Some(y) => {
                    let y = bits_arg(&y, "--y")?;
                    let v = p.eval(v0, &x, &y).map_err(anyhow::Error::from)?;
                    print_json(&json!({ "vertex": v, "output": p.output_bit(v).ok() }));
                }
                None if g.float => {
                    let d: VertexDistribution<f64> =
                        exact_distribution(&p, v0, &x, cap).map_err(anyhow::Error::from)?;
                    emit_distribution(g, &d, json!({ "x": format_bitstring(&x) }));
                }
                None => {
                    let d: VertexDistribution<BigRational> =
                        exact_distribution(&p, v0, &x, cap).map_err(anyhow::Error::from)?;
                    emit_distribution(g, &d, json!({ "x": format_bitstring(&x) }));
                }
            }
        }
        Command::Simulate {
            bp,
            x,
            mode,
            sequential,
            trials,
            master_seed,
            overrides,
        } => {
            let p = load_program(&bp)?;
            let x = bits_arg(&x, "--x")?;
            let (variant, seq) = if mode.eq_ignore_ascii_case("sow") {
                (Variant::A, true)
            } else {
                (
                    parse_variant(&mode).ok_or_else(|| usage(format!("unknown mode `{mode}`")))?,
                    sequential,
                )
            };
            let seed = master_seed.or(g.seed);
            if trials.is_some() && seed.is_none() {
                return Err(usage("Monte-Carlo simulation needs --master-seed"));
            }
            let mut ecfg = ExperimentConfig::new(ExperimentKind::HybridCompare);
            apply_overrides(&mut ecfg, overrides.as_deref())?;
            ecfg.master_seed = seed;
            let scfg = simulation_config(&ecfg, &p);
            let smode = if seq {
                Mode::Sequential
            } else {
                Mode::RandomAccess
            };
            let params = derive_parameters(&p, smode, &scfg).map_err(anyhow::Error::from)?;
            let ext = plan_extractor(&params, ecfg.ext_seed_len, ecfg.ext_k, ecfg.ext_eps)?;
            let pj = parameters_json(&params, ext.as_ref());
            let sim = Simulator::with_parameters(&p, params, scfg, ext.as_ref())
                .map_err(anyhow::Error::from)?;
            let v0 = p.require_start().map_err(anyhow::Error::from)?;
            let doc = json!({
                "schema_version": bpderand::experiment::SCHEMA_VERSION,
                "mode": format!("{variant:?}"),
                "sequential": seq,
                "x": format_bitstring(&x),
                "parameters": pj,
            });
            match trials {
                Some(trials) => {
                    let (d, stats) = bpderand::montecarlo::sample_simulation::<_, BigRational>(
                        &sim,
                        variant,
                        v0,
                        &x,
                        trials,
                        seed.unwrap_or(0),
                    )
                    .map_err(anyhow::Error::from)?;
                    let mut doc = doc;
                    doc["trials"] = json!(trials);
                    doc["bits_consumed"] = json!(stats.bits);
                    doc["trace_summary"] = json!({
                        "phases": stats.phases,
                        "max_phases": stats.max_phases,
                        "absorbed": stats.absorbed,
                        "restricted_reads": stats.restricted_reads,
                        "min_restricted_steps": stats.min_restricted_steps,
                    });
                    emit_distribution(g, &d, doc);
                }
                None => {
                    let one = sim
                        .run(variant, v0, &x, &mut trial_stream(seed.unwrap_or(0), 0))
                        .map_err(anyhow::Error::from)?;
                    let mut doc = doc;
                    doc["bits_consumed"] = json!(one.trace.bits);
                    doc["trace_summary"] = json!({
                        "phases": one.trace.phases.len(),
                        "absorbed": one.trace.absorbed,
                    });
                    if g.float {
                        let d: VertexDistribution<f64> = sim
                            .exact_law(variant, v0, &x, cap)
                            .map_err(anyhow::Error::from)?;
                        emit_distribution(g, &d, doc);
                    } else {
                        let d: VertexDistribution<BigRational> = sim
                            .exact_law(variant, v0, &x, cap)
                            .map_err(anyhow::Error::from)?;
                        emit_distribution(g, &d, doc);
                    }
                }
            }
        }
        Command::HybridCompare {
            bp,
            left,
            right,
            sequential,
            trials,
            inputs,
            bad_threshold,
            overrides,
        } => {
            let mut cfg = ExperimentConfig::new(ExperimentKind::HybridCompare);
            cfg.instances = Some(
                bp.iter()
                    .map(|p| p.display().to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            cfg.left = Some(left);
            cfg.right = Some(right);
            cfg.sequential = Some(sequential);
            cfg.trials = trials;
            cfg.inputs = inputs;
            cfg.bad_threshold = Some(bad_threshold);
            cfg.master_seed = Some(g.seed.unwrap_or(0));
            cfg.cap = g.cap;
            if g.float {
                cfg.arithmetic = Some("float".into());
            }
            apply_overrides(&mut cfg, overrides.as_deref())?;
            let res = run_experiment(&cfg, Path::new("."))?;
            match g.format {
                OutFormat::Csv => print!("{}", String::from_utf8_lossy(&res.artifacts[0].bytes)),
                OutFormat::Json => print_json(&res.summary),
            }
        }
        Command::ExtractorTest {
            kind,
            ell,
            k,
            eps,
            seed_len,
            out,
            alpha,
            family,
            exhaustive,
            functions,
            values,
        } => {
            let ext = build_extractor(&kind, ell, k, eps, seed_len, out, alpha)?;
            let functions = if exhaustive { functions } else { 0 };
            let (report, ok) = extractor_report(
                ext.as_ref(),
                family,
                functions,
                values,
                g.seed.unwrap_or(0),
                cap,
            )?;
            print_json(&report);
            if !ok {
                return Err(Failure::Check("extractor check failed".into()));
            }
        }
        Command::Prg {
            kind,
            seed_hex,
            len,
            space,
            eps,
            block,
            source_len,
            call_seed,
            out_per_call,
            calls,
        } => {
            let bytes =
                hex::decode(seed_hex.trim()).map_err(|e| usage(format!("--seed-hex: {e}")))?;
            let bits = bytes_to_bits(&bytes);
            let take = |need: usize| -> Result<Vec<bool>, Failure> {
                if bits.len() < need {
                    return Err(usage(format!("seed needs {need} bits, got {}", bits.len())));
                }
                Ok(bits[..need].to_vec())
            };
            let out = match kind {
                PrgKind::Nisan => {
                    let space = space.ok_or_else(|| usage("nisan needs --space"))?;
                    let params = match block {
                        Some(w) => NisanParams::with_block(space, len, eps, w),
                        None => NisanParams::new(space, len, eps),
                    }
                    .map_err(anyhow::Error::from)?;
                    nisan_output(&take(params.seed_len())?, &params).map_err(anyhow::Error::from)?
                }
                PrgKind::Nz => {
                    let need = |v: Option<usize>, f: &str| {
                        v.ok_or_else(|| usage(format!("nz needs --{f}")))
                    };
                    let params = NzParams::new(
                        need(source_len, "source-len")?,
                        need(call_seed, "call-seed")?,
                        need(out_per_call, "out-per-call")?,
                        need(calls, "calls")?,
                        eps,
                        len,
                    )
                    .map_err(anyhow::Error::from)?;
                    nz_generate(&take(params.seed_len())?, &params).map_err(anyhow::Error::from)?
                }
            };
            println!("{}", hex::encode(bits_to_bytes(&out)));
        }
        Command::Gip { x, m } => {
            let x = bits_arg(&x, "--x")?;
            let r = generate_r(&x, m).map_err(anyhow::Error::from)?;
            println!("{}", hex::encode(bits_to_bytes(&r)));
        }
        Command::DerandSr {
            bp,
            truth,
            exhaustive: _,
            out,
            max_density,
        } => {
            let p = load_program(&bp)?;
            let truth = match truth {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let clean: String = text.chars().filter(|c| !c.is_whitespace()).collect();
                    bits_arg(&clean, "truth table")?
                }
                None => majority_truth(&p, cap.max(1 << 26)).map_err(anyhow::Error::from)?,
            };
            let name = bp
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let (rows, mut summary) = mistake_report(&name, &p, &truth, cap.max(1 << 26))?;
            summary["schema_version"] = json!(bpderand::experiment::SCHEMA_VERSION);
            let csv = format!("{MISTAKE_CSV_HEADER}{rows}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                std::fs::write(dir.join("derand-sr.csv"), &csv).context("writing csv")?;
                let mut js = serde_json::to_string_pretty(&summary).expect("serializes");
                js.push('\n');
                std::fs::write(dir.join("summary.json"), js).context("writing summary")?;
            }
            match g.format {
                OutFormat::Csv => print!("{csv}"),
                OutFormat::Json => print_json(&summary),
            }
            let density = summary["mistake_density"].as_f64().unwrap_or(1.0);
            if max_density.is_some_and(|m| density > m) {
                return Err(Failure::Check(format!(
                    "mistake density {density} exceeds the limit"
                )));
            }
        }
        Command::FfTest { samples } => {
            let rows = ff_table(samples, g.seed.unwrap_or(0))?;
            match g.format {
                OutFormat::Csv => print!("{}", ff_csv(&rows)),
                OutFormat::Json => print_json(&json!(rows
                    .iter()
                    .map(|r| json!({"check": r.check, "a": r.a, "b": r.b, "cases": r.cases, "failures": r.failures}))
                    .collect::<Vec<_>>())),
            }
            if rows.iter().any(|r| r.failures > 0) {
                return Err(Failure::Check("field verification failed".into()));
            }
        }
        Command::Experiment { config, out } => {
            let mut cfg = load_config(&config).map_err(|e| usage(e.to_string()))?;
            if g.seed.is_some() {
                cfg.master_seed = g.seed;
            }
            if cfg.cap.is_none() {
                cfg.cap = g.cap;
            }
            if g.float {
                cfg.arithmetic = Some("float".into());
            }
            let base = config.parent().unwrap_or(Path::new("."));
            let res = run_experiment(&cfg, base)?;
            let dir = match (out, &cfg.out_dir) {
                (Some(d), _) => d,
                (None, Some(d)) => base.join(d),
                (None, None) => PathBuf::from("results").join(cfg.kind.name()),
            };
            write_artifacts(&dir, &res)?;
            print_json(&res.summary);
            if !res.passed {
                return Err(Failure::Check(format!("{} checks failed", cfg.kind.name())));
            }
        }
        Command::Generate {
            n,
            m,
            width,
            depth,
            discipline,
        } => {
            let discipline = parse_discipline(&discipline)
                .ok_or_else(|| usage(format!("unknown discipline `{discipline}`")))?;
            let shape = ProgramShape {
                n,
                m,
                width,
                depth,
                discipline,
            };
            let p = random_program(shape, g.seed.unwrap_or(0)).map_err(|e| anyhow!(e))?;
            match g.format {
                OutFormat::Csv => print!("{}", serialize_bp(&p)),
                OutFormat::Json => println!("{}", serialize_bp_json(&p)),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
