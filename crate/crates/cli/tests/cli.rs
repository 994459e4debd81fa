//! End-to-end checks of the `riemannlab` binary: grammar, exit codes,
//! artifacts and determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("riemannlab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn riemannlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riemannlab"))
        .args(args)
        .env_remove("RIEMANNLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn with_out<'a>(args: &[&'a str], dir: &'a Path) -> Vec<&'a str> {
    let mut v = args.to_vec();
    v.push("--out");
    v.push(dir.to_str().unwrap());
    v
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn documented_examples_are_valid_configs() {
    let eval = riemannlab(&[
        "theta", "eval", "--function", "R", "--t0", "0", "--t1", "6.2832", "--steps", "2000", "--N", "100000", "--dry-run",
    ]);
    assert_eq!(eval.status.code(), Some(0), "{}", stderr(&eval));
    let config: Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert_eq!(config["parameters"]["N"], "100000");
    assert_eq!(config["parameters"]["t1"], "6.2832");

    let frame = riemannlab(&[
        "frame", "trajectory", "--n", "16", "--nu", "1", "--Gamma", "1", "--omega", "0/1", "--T", "0.25", "--dry-run",
    ]);
    assert_eq!(frame.status.code(), Some(0), "{}", stderr(&frame));
    let config: Value = serde_json::from_slice(&frame.stdout).unwrap();
    assert_eq!(config["parameters"]["omega"], "0/1");
    // Defaults are echoed too.
    assert_eq!(config["parameters"]["tol"], "1e-10");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = riemannlab(&["theta", "eval", "--bogus", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    let o = riemannlab(&["theta", "frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = riemannlab(&["spectra", "eval"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_values_name_the_flag() {
    let o = riemannlab(&["frame", "trajectory", "--omega", "1/0", "--dry-run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--omega"), "{}", stderr(&o));
    let o = riemannlab(&["theta", "eval", "--steps", "many", "--dry-run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--steps"), "{}", stderr(&o));
    let dir = scratch("invalid");
    let o = riemannlab(&with_out(&["ss", "profile", "--c", "-1"], &dir));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`c`"), "{}", stderr(&o));
}

#[test]
fn failures_emit_a_json_report() {
    let dir = scratch("failure");
    let blocker = dir.join("not-a-directory");
    fs::write(&blocker, "x").unwrap();
    let o = riemannlab(&["mf", "spectrum", "--out", blocker.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(report["status"], "error");
    assert_eq!(report["kind"], "io");
}

#[test]
fn thread_cap_is_validated() {
    let run = |value: &str| {
        Command::new(env!("CARGO_BIN_EXE_riemannlab"))
            .args(["mf", "spectrum", "--dry-run"])
            .env("RIEMANNLAB_THREADS", value)
            .output()
            .unwrap()
    };
    assert_eq!(run("0").status.code(), Some(2));
    assert_eq!(run("two").status.code(), Some(2));
    assert_eq!(run("1").status.code(), Some(0));
}

#[test]
fn theta_eval_is_deterministic_and_paired_with_metadata() {
    let args = ["theta", "eval", "--function", "nm", "--n", "1", "--m", "2", "--t1", "1", "--steps", "50", "--N", "2000", "--svg"];
    let a = scratch("det-a");
    let b = scratch("det-b");
    for dir in [&a, &b] {
        let o = riemannlab(&with_out(&args, dir));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let csv_a = fs::read(a.join("theta_eval.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("theta_eval.csv")).unwrap());
    assert_eq!(fs::read(a.join("theta_eval.svg")).unwrap(), fs::read(b.join("theta_eval.svg")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value_re,value_im,tail_bound"));
    assert_eq!(lines.count(), 51);

    let meta: Value = serde_json::from_str(&fs::read_to_string(a.join("theta_eval.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "theta eval");
    assert_eq!(meta["parameters"]["m"], "2");
    assert_eq!(meta["parameters"]["function"], "nm");
    assert!(meta["tolerances"]["max_tail_bound"].as_f64().unwrap() > 0.0);
    assert_eq!(meta["data_files"][0], "theta_eval.csv");
    let svg = fs::read_to_string(a.join("theta_eval.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
}

#[test]
fn gauss_and_spectrum_outputs() {
    let dir = scratch("gauss");
    let o = riemannlab(&with_out(&["gauss", "sum", "--p", "2", "--q", "7"], &dir));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.join("gauss_sum.json")).unwrap()).unwrap();
    assert!((v["modulus"].as_f64().unwrap() - 7f64.sqrt()).abs() < 1e-12);

    let o = riemannlab(&with_out(&["gauss", "talbot", "--p", "1", "--q", "5"], &dir));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = fs::read_to_string(dir.join("gauss_talbot.csv")).unwrap();
    assert_eq!(rows.lines().count(), 6);

    let o = riemannlab(&with_out(&["mf", "spectrum", "--steps", "10"], &dir));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = fs::read_to_string(dir.join("mf_spectrum.csv")).unwrap();
    let last: Vec<f64> = rows.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[1] - (4.0 * 0.75 - 2.0)).abs() < 1e-12);
}

#[test]
fn polygon_commands_write_their_tables() {
    let dir = scratch("poly");
    let o = riemannlab(&with_out(&["nls", "run", "--n", "4", "--T", "0.05", "--eps", "1e-3", "--samples", "3"], &dir));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = fs::read_to_string(dir.join("nls_run.csv")).unwrap();
    assert!(rows.starts_with("t,k,R_re,R_im\n"));
    let diag: Value = serde_json::from_str(&fs::read_to_string(dir.join("nls_run.diagnostics.json")).unwrap()).unwrap();
    assert!(diag["max_relative_mass_drift"].as_f64().unwrap() < 1e-8);

    let o = riemannlab(&with_out(
        &["bf", "simulate", "--n", "2", "--cells", "8", "--margin", "2", "--T", "0.002", "--dumps", "2"],
        &dir,
    ));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.join("bf_simulate.curve_0000.csv").exists());
    assert!(dir.join("bf_simulate.corner.csv").exists());
    let config: Value = serde_json::from_str(&fs::read_to_string(dir.join("bf_simulate.config.json")).unwrap()).unwrap();
    assert_eq!(config["grid"]["cells_per_edge"], 8);
}
