use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bpderand_core::bits::{bits_to_bytes, parse_bitstring};
use bpderand_core::gip::generate_r;
use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpderand"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("exp.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn empty_instance_list_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = mistake-rate\n");
    let out = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty instance list"));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = ff-verify\nmaster_seed = 1\nfolds = 3\n");
    let out = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("folds"));
}

#[test]
fn monte_carlo_experiment_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = ff-verify\n");
    let out = run(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("master_seed"));
}

#[test]
fn mistake_rate_reproduces_the_frozen_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixtures().join("mistake14.cfg");
    let out = run(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let got = std::fs::read(dir.path().join("summary.json")).unwrap();
    let want = std::fs::read(fixtures().join("mistake14.summary.json")).unwrap();
    assert_eq!(
        String::from_utf8(got).unwrap(),
        String::from_utf8(want).unwrap()
    );
}

#[test]
fn manifest_records_the_derived_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixtures().join("repro/hybrid.cfg");
    let out = run(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["master_seed"], 0x12);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    let params = &manifest["parameters"][0]["parameters"];
    for key in ["r", "eps", "eps_prime", "k", "B", "blocks", "extractor"] {
        assert!(!params[key].is_null(), "missing {key}");
    }
    assert_eq!(params["r"], 6);
    assert_eq!(params["B"], 4);
    let csv = std::fs::read_to_string(dir.path().join("hybrid-compare.csv")).unwrap();
    assert!(csv.starts_with("instance,x,tvd,bad_flag\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn validate_reports_and_checks_disciplines() {
    let bp = fixtures().join("row64.bp");
    let out = run(&["validate", "--bp", bp.to_str().unwrap()]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["n"], 64);
    assert_eq!(v["disciplines"]["r-ow"], true);
    let out = run(&[
        "validate",
        "--bp",
        bp.to_str().unwrap(),
        "--discipline",
        "s-r",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_program_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.bp");
    std::fs::write(
        &path,
        "bp 1\nn 1 m 1\nstart 0\nv 0 i 0 j 0 e00 0 e01 0 e10 0 e11 0\n",
    )
    .unwrap();
    let out = run(&["validate", "--bp", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_exact_and_on_a_tape() {
    let bp = fixtures().join("quarter.bp");
    let out = run(&["eval", "--bp", bp.to_str().unwrap(), "--x", "10"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["distribution"]["4"], "3/4");
    assert_eq!(v["distribution"]["5"], "1/4");
    let out = run(&[
        "eval",
        "--bp",
        bp.to_str().unwrap(),
        "--x",
        "10",
        "--y",
        "11",
    ]);
    assert_eq!(stdout_json(&out)["output"], false);
}

#[test]
fn gip_prints_the_coins_in_hex() {
    let x = "101100111000101101";
    let out = run(&["gip", "--x", x, "--m", "3"]);
    assert!(out.status.success());
    let r = generate_r(&parse_bitstring(x).unwrap(), 3).unwrap();
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        hex::encode(bits_to_bytes(&r))
    );
}

#[test]
fn prg_output_length_and_seed_check() {
    let out = run(&[
        "prg",
        "--kind",
        "nisan",
        "--seed-hex",
        "ffffffffff",
        "--len",
        "16",
        "--space",
        "4",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim().len(), 4);
    let out = run(&[
        "prg",
        "--kind",
        "nisan",
        "--seed-hex",
        "ff",
        "--len",
        "16",
        "--space",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&[
        "prg",
        "--kind",
        "nz",
        "--seed-hex",
        "5a3c",
        "--len",
        "8",
        "--source-len",
        "8",
        "--call-seed",
        "4",
        "--out-per-call",
        "4",
        "--calls",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn extractor_test_report_shape() {
    let out = run(&[
        "extractor-test",
        "--kind",
        "hash",
        "--ell",
        "10",
        "--k",
        "6",
        "--eps",
        "0.25",
        "--seed-len",
        "4",
        "--out",
        "2",
        "--exhaustive",
        "--functions",
        "5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["verified"], true);
    assert_eq!(v["badset_count"].as_array().unwrap().len(), 5);
    assert_eq!(v["bound"], 256);
    assert_eq!(v["params"]["s"], 2);
}

#[test]
fn simulate_exact_and_sampled() {
    let bp = fixtures().join("row64.bp");
    let x = std::fs::read_to_string(fixtures().join("row64.x")).unwrap();
    let ov = "r=6,block=16,threshold=16,prg-block=2,t=8,ext-eps=0.25,ext-k=16,ext-seed=16";
    let args = [
        "simulate",
        "--bp",
        bp.to_str().unwrap(),
        "--x",
        x.trim(),
        "--mode",
        "H3",
        "--override",
        ov,
    ];
    let out = run(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let h3 = stdout_json(&out);
    let exact = stdout_json(&run(&[
        "eval",
        "--bp",
        bp.to_str().unwrap(),
        "--x",
        x.trim(),
    ]));
    assert_eq!(h3["distribution"], exact["distribution"]);

    let mut sampled = args.to_vec();
    sampled[6] = "A";
    sampled.extend(["--trials", "500"]);
    assert_eq!(
        run(&sampled).status.code(),
        Some(1),
        "sampling without a seed"
    );
    sampled.extend(["--master-seed", "0x9b"]);
    let out = run(&sampled);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    // 6 phases of 2 block bits and 16 seed bits
    assert_eq!(v["bits_consumed"], 500 * 6 * 18);
    assert!(v["trace_summary"]["max_phases"].as_u64().unwrap() <= 6);
}

#[test]
fn derand_sr_with_a_truth_file() {
    let dir = tempfile::tempdir().unwrap();
    let gen = run(&[
        "generate",
        "--n",
        "6",
        "--m",
        "2",
        "--width",
        "3",
        "--depth",
        "6",
        "--discipline",
        "s-r",
    ]);
    assert!(
        gen.status.success(),
        "{}",
        String::from_utf8_lossy(&gen.stderr)
    );
    let bp = dir.path().join("sr.bp");
    std::fs::write(&bp, &gen.stdout).unwrap();
    let truth = dir.path().join("truth.txt");
    std::fs::write(&truth, format!("{}\n", "01".repeat(32))).unwrap();
    let outdir = dir.path().join("out");
    let out = run(&[
        "derand-sr",
        "--bp",
        bp.to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
        "--exhaustive",
        "--out",
        outdir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = stdout_json(&out);
    assert_eq!(v["inputs"], 64);
    assert_eq!(v["n"], 6);
    let csv = std::fs::read_to_string(outdir.join("derand-sr.csv")).unwrap();
    assert!(csv.starts_with("instance,x,f,p_r,mismatch\n"));
    assert_eq!(csv.lines().count(), 65);
    // the table index reads x0 as its low bit
    assert!(csv.lines().skip(1).all(|l| {
        let c: Vec<&str> = l.split(',').collect();
        c[1].starts_with('1') == (c[2] == "1")
    }));
}

#[test]
fn ff_test_table() {
    let out = run(&["ff-test", "--samples", "5", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("check,a,b,cases,failures\n"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0")));
}

#[test]
fn generate_is_seeded() {
    let args = [
        "generate", "--n", "6", "--m", "3", "--width", "3", "--depth", "4", "--seed", "5",
        "--format", "csv",
    ];
    let a = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, run(&args).stdout);
    assert!(String::from_utf8_lossy(&a.stdout).starts_with("bp 1\n"));
}

#[test]
fn bad_flags_exit_with_one() {
    assert_eq!(run(&["simulate"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
