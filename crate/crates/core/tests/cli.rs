//! End-to-end runs of the `curvelab` binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_curvelab");

fn run(args: &[&str], out: &Path) -> i32 {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(run(&["verify", "--suite", "threshold"], out), 0);
    assert_eq!(run(&["verify", "--bogus"], out), 2);
    assert_eq!(run(&["scaling", "--lambda", "8..4"], out), 2);
    assert_eq!(run(&["sharpness", "--kappa", "1.5"], out), 2);

    let zero = out.join("zero.json");
    fs::write(&zero, r#"{"signal":{"kind":"zero","half_width":10,"nodes":256}}"#).unwrap();
    assert_eq!(run(&["maximal", "--config", zero.to_str().unwrap()], out), 2);

    let unknown = out.join("unknown.json");
    fs::write(&unknown, r#"{"lambda":64,"colour":"red"}"#).unwrap();
    assert_eq!(run(&["kernel", "--config", unknown.to_str().unwrap()], out), 2);

    // Far outside the resolved window of a narrow grid.
    let far = out.join("far.json");
    fs::write(
        &far,
        r#"{"signal":{"kind":"gaussian","half_width":4,"nodes":64},"x_min":-500,"x_max":500}"#,
    )
    .unwrap();
    assert_eq!(run(&["propagate", "--config", far.to_str().unwrap()], out), 3);
}

#[test]
fn propagate_matches_gaussian_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["propagate", "--t", "0.25,0.5"], dir.path()), 0);
    let text = fs::read_to_string(dir.path().join("propagate.csv")).unwrap();
    assert!(text.starts_with("# schema_version=1 command=propagate config={"));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let v: Vec<f64> = rec.iter().map(|s| s.parse().unwrap()).collect();
        let want = curvelab::suites::gaussian_modulus(v[1], v[0]);
        assert!((v[4] - want).abs() <= 1e-6 * want, "{v:?}");
        rows += 1;
    }
    assert_eq!(rows, 2 * 201);
    let m = manifest(&dir.path().join("propagate.json"));
    assert_eq!(m["schema_version"], 1);
    let n0 = m["results"]["initial_l2_norm"].as_f64().unwrap();
    for n in m["results"]["norms"].as_array().unwrap() {
        assert!((n["l2_norm"].as_f64().unwrap() - n0).abs() < 1e-10 * n0);
    }
}

#[test]
fn scaling_is_deterministic_and_replays_from_manifest() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["scaling", "--family", "f1", "--kappa", "0.5", "--lambda", "16..256"];
    assert_eq!(run(&args, a.path()), 0);
    assert_eq!(run(&args, b.path()), 0);
    let csv_a = fs::read(a.path().join("scaling.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.path().join("scaling.csv")).unwrap());

    let replay = tempfile::tempdir().unwrap();
    let cfg = a.path().join("scaling.json");
    assert_eq!(run(&["scaling", "--config", cfg.to_str().unwrap()], replay.path()), 0);
    assert_eq!(csv_a, fs::read(replay.path().join("scaling.csv")).unwrap());

    let m = manifest(&cfg);
    let fit = &m["results"]["fits"]["maximal_norm"];
    let (got, want) = (fit["slope"].as_f64().unwrap(), fit["predicted_slope"].as_f64().unwrap());
    assert!((got - want).abs() < 0.05, "{got} vs {want}");
}

#[test]
fn kernel_writes_binned_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["kernel", "--pairs", "1000", "--seed", "3"], dir.path()), 0);
    let m = manifest(&dir.path().join("kernel.json"));
    assert_eq!(m["command"], "kernel");
    assert_eq!(m["config"]["seed"], 3);
    assert_eq!(m["results"]["trivial_bound_holds"], true);
    let text = fs::read_to_string(dir.path().join("kernel_v2.csv")).unwrap();
    let header = text.lines().nth(1).unwrap();
    assert_eq!(header, "dx,dt,abs_K,region,bin,envelope");
    assert_eq!(text.lines().count(), 1000 + 2);
}

#[test]
fn sharpness_reports_lower_bounds() {
    let dir = tempfile::tempdir().unwrap();
    for fam in ["f1", "f2"] {
        assert_eq!(run(&["sharpness", "--family", fam, "--lambda", "32"], dir.path()), 0);
        let m = manifest(&dir.path().join("sharpness.json"));
        assert_eq!(m["results"]["lower_bound"]["pass"], true, "{fam}");
        assert_eq!(m["results"]["algebra"]["threshold"], 0.25);
    }
    assert!(dir.path().join("sharpness_graph.csv").exists());
}
