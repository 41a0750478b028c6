use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::{json, Value};
use tempfile::TempDir;

fn unfold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unfold"))
        .args(args)
        .output()
        .expect("spawn unfold")
}

fn config(intensity: Value, j: u32, t: &[f64], replicates: usize) -> Value {
    json!({
        "schema_version": 1,
        "kernel": { "kind": "log-potential-periodized" },
        "intensity": intensity,
        "J": j,
        "filter": "symmlet6",
        "t": t,
        "replicates": replicates,
        "seed": 7
    })
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn run_ok(args: &[&str]) -> Output {
    let out = unfold(args);
    assert!(
        out.status.success(),
        "unfold {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn same_file(a: &Path, b: &Path, name: &str) {
    let (x, y) = (
        fs::read_to_string(a.join(name)).unwrap(),
        fs::read_to_string(b.join(name)).unwrap(),
    );
    assert!(
        x == y,
        "{name} differs between {} and {}",
        a.display(),
        b.display()
    );
}

/// Manifests echo the output directory; everything else must agree.
fn same_manifest(a: &Path, b: &Path, name: &str) {
    let read = |dir: &Path| {
        let mut v: Value =
            serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap();
        v["config"]["output_dir"] = Value::Null;
        v
    };
    assert_eq!(read(a), read(b), "{name}");
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_byte_reproducible_and_shaped() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "peak.json",
        &config(json!({"kind": "peak"}), 8, &[1e6], 2),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_ok(&[
            "simulate",
            "--config",
            s(&cfg),
            "--out",
            s(out),
            "--no-timestamp",
        ]);
    }
    for name in ["counts_t0_r0.csv", "counts_t0_r1.csv", "counts_t0_r0.json"] {
        same_file(&a, &b, name);
    }
    same_manifest(&a, &b, "simulate-manifest.json");
    let csv = fs::read_to_string(a.join("counts_t0_r0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("bin_index,count"));
    assert_eq!(lines.count(), 256);
    assert_ne!(
        fs::read(a.join("counts_t0_r0.csv")).unwrap(),
        fs::read(a.join("counts_t0_r1.csv")).unwrap()
    );
}

#[test]
fn seed_override_changes_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &config(json!({"kind": "peak"}), 6, &[1e4], 1),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&["simulate", "--config", s(&cfg), "--out", s(&a)]);
    run_ok(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&b),
        "--seed",
        "8",
    ]);
    assert_ne!(
        fs::read(a.join("counts_t0_r0.csv")).unwrap(),
        fs::read(b.join("counts_t0_r0.csv")).unwrap()
    );
}

#[test]
fn invalid_config_exits_2_with_field() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("t", config(json!({"kind": "peak"}), 6, &[0.0], 1)),
        ("J", config(json!({"kind": "peak"}), 2, &[1e4], 1)),
        ("replicates", config(json!({"kind": "peak"}), 6, &[1e4], 0)),
    ];
    for (field, cfg) in cases {
        let path = write_config(dir.path(), "bad.json", &cfg);
        let out = unfold(&[
            "simulate",
            "--config",
            s(&path),
            "--out",
            s(&dir.path().join("o")),
        ]);
        assert_eq!(out.status.code(), Some(2), "{field}");
        assert!(
            String::from_utf8_lossy(&out.stderr).contains(field),
            "{field}"
        );
    }
    let mut cfg = config(json!({"kind": "peak"}), 6, &[1e4], 1);
    cfg["colour"] = json!("red");
    let path = write_config(dir.path(), "unknown.json", &cfg);
    assert_eq!(
        unfold(&["simulate", "--config", s(&path)]).status.code(),
        Some(2)
    );
}

#[test]
fn zero_counts_are_infeasible() {
    let dir = TempDir::new().unwrap();
    let counts = dir.path().join("zeros.csv");
    let mut csv = String::from("bin_index,count\n");
    for k in 0..64 {
        csv.push_str(&format!("{k},0\n"));
    }
    fs::write(&counts, csv).unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &config(json!({"kind": "peak"}), 6, &[1e4], 1),
    );
    let out = unfold(&[
        "estimate",
        "--config",
        s(&cfg),
        "--counts",
        s(&counts),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha_coarse = 0"));
}

#[test]
fn missing_counts_file_is_io_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &config(json!({"kind": "peak"}), 6, &[1e4], 1),
    );
    let out = unfold(&[
        "estimate",
        "--config",
        s(&cfg),
        "--counts",
        s(&dir.path().join("nope.csv")),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(
        unfold(&["simulate", "--config", s(&dir.path().join("missing.json"))])
            .status
            .code(),
        Some(5)
    );
}

#[test]
fn estimate_reads_simulated_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &config(
            json!({"kind": "exp-sine", "offset": 1.0, "amplitude": 1.0}),
            7,
            &[1e5],
            1,
        ),
    );
    let sim = dir.path().join("sim");
    run_ok(&["simulate", "--config", s(&cfg), "--out", s(&sim)]);
    let est = dir.path().join("est");
    run_ok(&[
        "estimate",
        "--config",
        s(&cfg),
        "--counts",
        s(&sim.join("counts_t0_r0.csv")),
        "--out",
        s(&est),
    ]);
    let model: Value =
        serde_json::from_str(&fs::read_to_string(est.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["J"], 7);
    assert!(model["diagnostics"]["residual"].as_f64().unwrap() <= 1e-8);
    let f_hat = fs::read_to_string(est.join("f_hat.csv")).unwrap();
    assert_eq!(f_hat.lines().next(), Some("x,f_hat"));
    assert_eq!(f_hat.lines().count(), 129);
    for line in f_hat.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v > 0.0 && v.is_finite());
    }
}

#[test]
fn resolution_mismatch_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let counts = dir.path().join("c.csv");
    fs::write(
        &counts,
        "bin_index,count\n0,3\n1,4\n2,5\n3,6\n4,1\n5,1\n6,1\n7,1\n",
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &config(json!({"kind": "peak"}), 6, &[1e4], 1),
    );
    let out = unfold(&[
        "estimate",
        "--config",
        s(&cfg),
        "--counts",
        s(&counts),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_smoke() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "smoke.json",
        &config(json!({"kind": "peak"}), 6, &[1e4, 1e5], 1),
    );
    let out = dir.path().join("o");
    let start = Instant::now();
    run_ok(&["experiment", "--config", s(&cfg), "--out", s(&out)]);
    assert!(start.elapsed().as_secs() < 60);
    for name in [
        "overlay_t0.svg",
        "overlay_t1.svg",
        "rate.svg",
        "runs.csv",
        "rate_table.csv",
        "report.json",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    let table = fs::read_to_string(out.join("rate_table.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("t,replicate,loss_kind,value"));
    assert_eq!(table.lines().count(), 1 + 2 * 2);
    for line in table.lines().skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(v > 0.0, "{line}");
    }
    let svg = fs::read_to_string(out.join("rate.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("generated at unix time"));
}

#[test]
fn no_timestamp_makes_svg_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &config(json!({"kind": "peak"}), 6, &[1e4, 1e5], 2),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_ok(&[
            "experiment",
            "--config",
            s(&cfg),
            "--out",
            s(out),
            "--no-timestamp",
        ]);
    }
    for name in [
        "runs.csv",
        "rate_table.csv",
        "report.json",
        "rate.svg",
        "overlay_t1.svg",
    ] {
        same_file(&a, &b, name);
    }
    same_manifest(&a, &b, "experiment-manifest.json");
}

#[test]
fn manifest_reproduces_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &config(json!({"kind": "peak"}), 6, &[1e4, 1e5], 2),
    );
    let a = dir.path().join("a");
    run_ok(&[
        "experiment",
        "--config",
        s(&cfg),
        "--out",
        s(&a),
        "--seed",
        "99",
    ]);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(a.join("experiment-manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["seed"], 99);
    assert!(manifest["stiffness_key"].is_string());
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 4);
    assert!(manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|o| o == "runs.csv"));

    let b = dir.path().join("b");
    run_ok(&[
        "experiment",
        "--config",
        s(&a.join("experiment-manifest.json")),
        "--out",
        s(&b),
    ]);
    for name in ["runs.csv", "rate_table.csv", "report.json"] {
        same_file(&a, &b, name);
    }
}

#[test]
fn diagnose_emits_json() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &config(json!({"kind": "peak"}), 7, &[1e6], 1),
    );
    let out = dir.path().join("o");
    run_ok(&["diagnose", "--config", s(&cfg), "--out", s(&out)]);
    let d: Value =
        serde_json::from_str(&fs::read_to_string(out.join("diagnostics.json")).unwrap()).unwrap();
    let galerkin = d["galerkin"].as_array().unwrap();
    assert_eq!(galerkin.len(), 6);
    for row in galerkin {
        assert!(row["c_min"].as_f64().unwrap() > 0.0);
        assert!(row["identity_residual"].as_f64().unwrap() <= 1e-10);
    }
    assert_eq!(d["theory"].as_array().unwrap().len(), 7);
    assert_eq!(d["lemmas"]["all_pass"], true);
}

#[test]
fn diagnose_reports_zero_error_for_family_truth() {
    let dir = TempDir::new().unwrap();
    // exp(1 + 0.5 ψ_{0,0}) under Haar: a member of the level-1 family.
    let cfg = json!({
        "schema_version": 1,
        "kernel": { "kind": "log-potential-periodized" },
        "intensity": { "kind": "tabulated", "values": [4.4816890703380645, 1.6487212707001282] },
        "J": 6,
        "filter": "haar",
        "t": [1e5],
        "diagnose": { "j_max": 3, "galerkin_j_max": 2 }
    });
    let path = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("o");
    run_ok(&["diagnose", "--config", s(&path), "--out", s(&out)]);
    let d: Value =
        serde_json::from_str(&fs::read_to_string(out.join("diagnostics.json")).unwrap()).unwrap();
    for row in d["theory"].as_array().unwrap().iter().skip(1) {
        assert!(row["eps_j"].as_f64().unwrap().abs() < 1e-10, "{row}");
    }
}
