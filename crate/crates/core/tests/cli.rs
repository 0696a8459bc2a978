//! End-to-end tests of the `heredlab` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use heredlab::cli::{Cli, RunConfig};
use serde_json::Value;

fn heredlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heredlab"))
        .args(args)
        .env("HEREDLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = heredlab(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    sls: PathBuf,
    sls1: PathBuf,
    iso: PathBuf,
    uniform: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    Fixture {
        sls: write(&root, "sls.json", r#"{"C0": 1.0, "modes": [{"C": 1.0, "lambda": 2.0}]}"#),
        sls1: write(&root, "sls1.json", r#"{"C0": 1.0, "modes": [{"C": 1.0, "lambda": 1.0}]}"#),
        iso: write(
            &root,
            "iso.json",
            r#"{"bulk": {"C0": 3.0, "modes": [{"C": 1.0, "lambda": 10.0}]},
                "shear": {"C0": 1.0, "modes": [{"C": 0.5, "lambda": 1.0}]}}"#,
        ),
        uniform: write(
            &root,
            "uniform.json",
            r#"{"lambda0": 0.0, "atoms": [], "density": {"support": [1.0, 2.0], "values": [1.0]}}"#,
        ),
        root,
        _dir: dir,
    }
}

#[test]
fn certify_reports_closed_form_gamma() {
    let f = fixture();
    let v = json(&["certify", "--material", s(&f.sls), "--lambda0", "0"]);
    assert_eq!(v["gamma"].as_f64().unwrap(), 0.5);
    assert_eq!(v["contractive"], Value::Bool(true));
    assert_eq!(v["a_priori_factor"].as_f64().unwrap(), 2.0);
    assert_eq!(v["hs_constant"].as_f64().unwrap(), 0.5);
}

#[test]
fn require_contractive_sets_exit_status() {
    let f = fixture();
    let ok = heredlab(&["certify", "--material", s(&f.sls), "--require-contractive"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = heredlab(&["certify", "--material", s(&f.sls), "--lambda0=1.5", "--require-contractive"]);
    assert_eq!(bad.status.code(), Some(3));
    let diverging = heredlab(&["certify", "--material", s(&f.sls), "--lambda0=2.5"]);
    assert_eq!(diverging.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&diverging.stderr).contains("mode"));
}

#[test]
fn modulus_at_zero_frequency_is_equilibrium() {
    let f = fixture();
    let v = json(&["modulus", "--material", s(&f.sls), "--omega", "0"]);
    assert_eq!(v["storage"].as_f64().unwrap(), 1.0);
    assert_eq!(v["loss"].as_f64().unwrap(), 0.0);
    let iso = json(&["modulus", "--material", s(&f.iso), "--omega", "0", "--t", "0"]);
    assert_eq!(iso["bulk"]["storage"].as_f64().unwrap(), 3.0);
    assert_eq!(iso["shear"]["relaxation_modulus"].as_f64().unwrap(), 1.5);
}

#[test]
fn reduce_rank_zero_reports_leading_value() {
    let f = fixture();
    let out = f.root.join("reduce");
    let v = json(&[
        "reduce", "--material", s(&f.sls1), "--rank", "0", "--grid", "200", "--out-dir", s(&out),
    ]);
    let s1 = v["singular_values"][0].as_f64().unwrap();
    assert_eq!(v["truncation_error"].as_f64().unwrap(), s1);
    assert!((v["measured_error"].as_f64().unwrap() - s1).abs() <= 1e-8 * s1);
    assert!(v["sls_comparison"][0]["ode_relative_deviation"].as_f64().unwrap().abs() < 1e-4);
    let table = std::fs::read_to_string(out.join("singular_values.csv")).unwrap();
    assert!(table.starts_with("k,s,mu\n"));
}

#[test]
fn reduce_writes_singular_functions() {
    let f = fixture();
    let out = f.root.join("funcs");
    let v = json(&[
        "reduce", "--material", s(&f.sls1), "--lambda0", "0.5", "--rank", "3", "--grid", "64",
        "--quadrature", "gauss", "--out-dir", s(&out),
    ]);
    assert_eq!(v["nodes"].as_u64().unwrap(), 64);
    let phi = std::fs::read_to_string(out.join("phi.csv")).unwrap();
    let mut lines = phi.lines();
    assert_eq!(lines.next().unwrap(), "tau,phi_1,phi_2,phi_3");
    assert_eq!(lines.count(), 64);
    let lag = json(&[
        "reduce", "--material", s(&f.sls1), "--lambda0", "0.5", "--rank", "4", "--basis", "laguerre",
        "--out-dir", s(&out),
    ]);
    assert!(lag["laguerre_gram_deviation"].as_f64().unwrap() <= 1e-10);
    assert!(out.join("laguerre.csv").is_file());
}

#[test]
fn creep_solve_matches_closed_form() {
    let f = fixture();
    let strain = f.root.join("strain.csv");
    let v = json(&[
        "solve", "--material", s(&f.sls1), "--mode", "creep", "--T", "2", "--steps", "1000", "--strain-out",
        s(&strain),
    ]);
    assert!(v["creep_closed_form_max_relative_error"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["bound_check"], Value::Bool(true));
    let text = std::fs::read_to_string(&strain).unwrap();
    assert!(text.starts_with("t,strain\n"));
    assert_eq!(text.lines().count(), 1002);
}

#[test]
fn custom_solve_with_picard() {
    let f = fixture();
    let mut csv = String::from("t,stress\n");
    for i in 0..=200 {
        let t = i as f64 * 0.01;
        csv.push_str(&format!("{t},{}\n", (3.0 * t).sin()));
    }
    let input = write(&f.root, "sigma.csv", &csv);
    let direct = json(&["solve", "--material", s(&f.sls), "--input", s(&input)]);
    let picard = json(&["solve", "--material", s(&f.sls), "--input", s(&input), "--method", "picard", "--tol", "1e-13"]);
    let a = direct["final_strain"].as_f64().unwrap();
    let b = picard["final_strain"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    let ratios = picard["ratios"].as_array().unwrap();
    assert!(ratios.iter().take(5).all(|r| r.as_f64().unwrap() <= 0.55));

    let stalled = heredlab(&["solve", "--material", s(&f.sls), "--input", s(&input), "--method", "picard", "--max-iter", "2"]);
    assert_eq!(stalled.status.code(), Some(4));
    let refused = heredlab(&[
        "solve", "--material", s(&f.sls), "--input", s(&input), "--method", "picard", "--lambda0", "1.5",
    ]);
    assert_eq!(refused.status.code(), Some(3));
}

#[test]
fn spectrum_commands() {
    let f = fixture();
    let v = json(&["spectrum", "--measure", s(&f.uniform), "--to-prony", "32", "--modulus", "2"]);
    assert_eq!(v["atoms"].as_array().unwrap().len(), 32);
    assert!(v["distance"].as_f64().unwrap() <= 1e-8);
    let atom = write(&f.root, "atom.json", r#"{"lambda0": 0.0, "atoms": [[1.5, 1.0]]}"#);
    let d = json(&["spectrum", "--measure", s(&f.uniform), "--distance", s(&atom), "--modulus", "2"]);
    assert!(d["distance"].as_f64().unwrap() > 0.0);
    let same = write(&f.root, "sls_atom.json", r#"{"lambda0": 0.0, "atoms": [[1.0, 1.0]]}"#);
    let c = json(&["spectrum", "--measure", s(&same), "--class-check", s(&f.sls1), "--rank", "3", "--grid", "100"]);
    assert_eq!(c["member"], Value::Bool(true));
    assert_eq!(c["nwidth"], c["singular_values"][3]);
}

#[test]
fn invalid_input_exits_with_two_and_lists_every_problem() {
    let f = fixture();
    let out = heredlab(&["reduce", "--material", "/missing.json", "--lambda0=-1", "--grid", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for needle in ["/missing.json", "--lambda0", "--grid"] {
        assert!(err.contains(needle), "{needle} missing: {err}");
    }
    let bad_card = write(&f.root, "bad.json", r#"{"C0": -1.0, "modes": [{"C": 1.0, "lambda": -2.0}]}"#);
    let out = heredlab(&["certify", "--material", s(&bad_card)]);
    assert_eq!(out.status.code(), Some(2));
    let unknown = heredlab(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let f = fixture();
    for args in [
        vec!["--json", "reduce", "--material", s(&f.sls1), "--rank", "4", "--grid", "500"],
        vec!["certify", "--material", s(&f.iso), "--lambda0", "0.3"],
        vec!["--json", "solve", "--material", s(&f.sls), "--mode", "creep", "--method", "picard"],
    ] {
        let a = heredlab(&args);
        let b = heredlab(&args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn output_file_matches_stdout() {
    let f = fixture();
    let path = f.root.join("report.json");
    let stdout = heredlab(&["--json", "certify", "--material", s(&f.sls)]).stdout;
    let status = heredlab(&["--json", "--output", s(&path), "certify", "--material", s(&f.sls)]);
    assert!(status.status.success() && status.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    let a: Value = serde_json::from_slice(&stdout).unwrap();
    let mut b: Value = serde_json::from_slice(&written).unwrap();
    b["config"]["output"] = Value::Null;
    assert_eq!(a, b);
}

#[test]
fn emitted_config_round_trips() {
    use clap::Parser;
    let f = fixture();
    let cases: Vec<Vec<&str>> = vec![
        vec!["heredlab", "--json", "certify", "--material", s(&f.sls), "--lambda0", "0.123456789012345"],
        vec!["heredlab", "--json", "reduce", "--material", s(&f.sls1), "--rank", "2", "--grid", "50", "--T", "0.7"],
        vec!["heredlab", "--json", "modulus", "--material", s(&f.iso), "--omega", "3.3"],
        vec!["heredlab", "--json", "solve", "--material", s(&f.sls), "--mode", "creep", "--stress", "0.1", "--steps", "20"],
        vec!["heredlab", "--json", "spectrum", "--measure", s(&f.uniform), "--to-prony", "4", "--modulus", "2"],
    ];
    for args in cases {
        let config = RunConfig::from_cli(Cli::try_parse_from(&args).unwrap()).unwrap();
        let out = heredlab(&args[1..]);
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        let back: RunConfig = serde_json::from_value(v["config"].clone()).unwrap();
        assert_eq!(back, config);
    }
}
