// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pwbandits"))
        .args(args)
        .output()
        .expect("spawn pwbandits")
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn path(rel: &str) -> String {
    root().join(rel).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        format!(
            "environment = {:?}\nstride = 1000\nrecord_timing = false\n\
             [[algorithms]]\nalgorithm = \"klucb\"\n\
             [[algorithms]]\nalgorithm = \"glr-klucb-local\"\n",
            path("problems/pb1.toml")
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = bin(&[
        "run", "--config", cfg.to_str().unwrap(), "--reps", "4", "--seed", "9",
        "--out", out.to_str().unwrap(), "--format", "both",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("glr-klucb-local"));
    for f in ["curves.csv", "summary.csv", "results.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["repetitions"], 4);
    assert_eq!(json["algorithms"][1]["runs"].as_array().unwrap().len(), 4);

    // Same seed, timing off: identical results whatever the thread count.
    let again = dir.path().join("again");
    let o = bin(&[
        "run", "--config", cfg.to_str().unwrap(), "--reps", "4", "--seed", "9",
        "--out", again.to_str().unwrap(), "--format", "json", "--parallel", "1",
    ]);
    assert!(o.status.success());
    let read = |d: &std::path::Path| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(d.join("results.json")).unwrap()).unwrap()
    };
    assert_eq!(read(&out)["algorithms"], read(&again)["algorithms"]);
}

#[test]
fn assumptions_report() {
    let o = bin(&[
        "--json", "check-assumptions", "--config", &path("problems/pb3.toml"),
        "--alpha", "0.05", "--delta", "0.01",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["local"], "fail");
    let o = bin(&[
        "check-assumptions", "--config", &path("configs/problem1.toml"),
        "--alpha", "0.1", "--delta", "0.01", "--threshold", "practical",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("local restarts"));
}

#[test]
fn tunings_json() {
    let o = bin(&[
        "--json", "tunings", "--config", &path("problems/pb1.toml"),
        "--known-upsilon", "--mode", "global",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let t: f64 = 5000.0;
    assert!((v["delta"].as_f64().unwrap() - 1.0 / (4.0 * t).sqrt()).abs() < 1e-12);
}

#[test]
fn detector_subcommands() {
    let o = bin(&[
        "--json", "false-alarm", "--mu0", "0.5", "--delta", "0.1", "--nmax", "200",
        "--reps", "50", "--ds", "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["repetitions"], 50);
    let o = bin(&[
        "delay", "--mu0", "0.2", "--mu1", "0.9", "--tau", "100", "--delta", "0.05",
        "--reps", "50", "--threshold", "practical", "--nmax", "500",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("p95"));
    let o = bin(&[
        "--json", "two-sample", "--s", "50", "--r", "50", "--mua", "0.3", "--mub", "0.6",
        "--reps", "2000",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn exit_codes() {
    // Bad arguments.
    assert_eq!(bin(&["run"]).status.code(), Some(1));
    assert_eq!(
        bin(&["false-alarm", "--mu0", "1.5", "--delta", "0.1"]).status.code(),
        Some(1)
    );
    // Bad config contents.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "environment = \"builtin:pb1\"\n[[algorithms]]\nalgorithm = \"nope\"\n")
        .unwrap();
    assert_eq!(bin(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    // Output directory that cannot be created.
    std::fs::write(
        &cfg,
        "environment = \"builtin:pb1\"\nstride = 5000\n[[algorithms]]\nalgorithm = \"klucb\"\n",
    )
    .unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = bin(&[
        "run", "--config", cfg.to_str().unwrap(), "--reps", "1",
        "--out", blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}
