use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const KEY: &str = "000102030405060708090a0b0c0d0e0f";

fn ioht(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ioht")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> serde_json::Value {
    assert_eq!(code(out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn infer_reports_metrics_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&ioht(&["infer", "--n", "300", "--vr", "0.05", "--json", "--out", path(dir.path())]));
    assert_eq!(v["n"], 300);
    assert_eq!(v["vr"], 0.05);
    assert!(v["t"].as_u64().unwrap() <= 300);
    for name in ["metrics.json", "reconstruction.csv", "reconstruction.svg"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let csv = fs::read_to_string(dir.path().join("reconstruction.csv")).unwrap();
    assert!(csv.starts_with("t,original,reconstructed,transmitted\n"));
    assert_eq!(csv.lines().count(), 301);
}

#[test]
fn generated_trace_feeds_back_in() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&ioht(&["gen", "trace", "--n", "120", "--out", path(dir.path())])), 0);
    let trace = dir.path().join("trace.csv");
    let from_file = json(&ioht(&["infer", "--input", path(&trace), "--json"]));
    let generated = json(&ioht(&["infer", "--n", "120", "--json"]));
    assert_eq!(from_file, generated);
}

#[test]
fn vr_sweep_is_monotone() {
    let v = json(&ioht(&["vr-sweep", "--n", "500", "--grid", "0,0.01,0.05,0.2", "--json"]));
    let t: Vec<u64> = v.as_array().unwrap().iter().map(|r| r["t"].as_u64().unwrap()).collect();
    assert_eq!(t.len(), 4);
    assert!(t.windows(2).all(|w| w[1] <= w[0]), "{t:?}");
}

#[test]
fn size_sweep_lists_plaintext_sizes() {
    let v = json(&ioht(&["size-sweep", "--json"]));
    let sizes: Vec<u64> = v.as_array().unwrap().iter().map(|r| r["plaintext_bytes"].as_u64().unwrap()).collect();
    assert_eq!(sizes, [1024, 498, 220, 105, 12]);
}

#[test]
fn dp_is_reproducible_for_a_seed() {
    let args = ["dp", "--epsilon", "0.5", "--trials", "5", "--seed", "3", "--json"];
    let a = json(&ioht(&args));
    assert_eq!(a, json(&ioht(&args)));
    assert_eq!(a["out_results"].as_array().unwrap().len(), 5);
    assert!(a["mean_abs_deviation"].as_f64().unwrap() > 0.0);
}

#[test]
fn epsilon_sweep_writes_per_epsilon_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = ioht(&["epsilon-sweep", "--grid", "0.1,1", "--trials", "20", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0);
    for name in ["epsilon_sweep.csv", "perturbed_eps_0.1.svg", "perturbed_eps_1.csv"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
}

#[test]
fn pipeline_from_config_file_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        format!(
            r#"{{"inference": {{"vr": 0.025, "beacon_period": 60, "recon_mode": "linear"}},
                "suite": "blowfish-ecb", "key": "{KEY}",
                "dp": {{"epsilon": 0.5, "sensitivity": 1.0}},
                "queries": [{{"aggregate": "mean", "field": "heart_rate"}}],
                "master_seed": 9}}"#
        ),
    )
    .unwrap();
    let args = ["pipeline", "--config", path(&config), "--json", "--out", path(dir.path())];
    let a = json(&ioht(&args));
    assert_eq!(a, json(&ioht(&args)));
    assert_eq!(a["suite"], "blowfish-ecb");
    assert!(a["energy_saving_percent"].as_f64().unwrap() > 0.0);
    let hops = fs::read_to_string(dir.path().join("hops.csv")).unwrap();
    assert!(hops.starts_with("hop,messages,payload_bytes,ciphertext_bytes\n"));
}

#[test]
fn chart_renders_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    fs::write(&input, "x,a,b\n0,1,2\n1,3,1\n2,2,5\n").unwrap();
    let out = ioht(&["chart", "--input", path(&input), "--out", path(dir.path()), "--name", "c.svg"]);
    assert_eq!(code(&out), 0);
    let svg = fs::read_to_string(dir.path().join("c.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("class=\"legend-entry\"").count(), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&ioht(&["no-such-command"])), 1);
    assert_eq!(code(&ioht(&["pipeline"])), 1, "missing key is a usage error");
    assert_eq!(code(&ioht(&["--help"])), 0);
    assert_eq!(code(&ioht(&["infer", "--vr=-1"])), 2);
    assert_eq!(code(&ioht(&["pipeline", "--key", "abcd"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "t,value\n0,70\n0,71\n").unwrap();
    let out = ioht(&["infer", "--input", path(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3"));
    assert_eq!(code(&ioht(&["infer", "--input", path(&dir.path().join("missing.csv"))])), 2);
}
