use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn probsense(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probsense"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn synth_then_run_from_directory() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("survey");
    let o = probsense(&["synth", "--synth-events", "4"], &data);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(data.join("manifest.json").exists());
    assert!(data.join("event_003.csv").exists());

    let out = dir.path().join("run");
    let o = probsense(
        &["run", "--dataset", data.to_str().unwrap(), "--n-events", "3", "--band", "0:200"],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n_events"], 3);
    assert_eq!(report["per_event"].as_array().unwrap().len(), 3);
    assert!(report["detection_latency_s"].is_number());
    for name in ["event_000.samples.csv", "event_000.recon.csv", "event_000.rate.csv"] {
        assert!(out.join("events").join(name).exists(), "{name}");
    }
    let samples = csv_rows(&out.join("events/event_000.samples.csv"));
    assert!(samples.windows(2).all(|w| w[0][0] < w[1][0]));
}

#[test]
fn partial_failure_exits_nonzero_with_listing() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("survey");
    fs::create_dir_all(&data).unwrap();
    fs::write(data.join("a.csv"), "value\n0\n0\n0\n").unwrap();
    let body: String = std::iter::once("value\n".to_string())
        .chain((0..400).map(|i| format!("{}\n", ((i as f64) * 0.2).sin())))
        .collect();
    fs::write(data.join("b.csv"), body).unwrap();
    let o = probsense(
        &["run", "--dataset", data.to_str().unwrap(), "--rate-hz", "2000"],
        &dir.path().join("out"),
    );
    assert!(!o.status.success());
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("event 0 (a)"), "{stderr}");
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["n_failed"], 1);
    assert!(report["per_event"][1]["metrics"].is_object());
}

#[test]
fn sweeps_write_curves() {
    let dir = tempfile::tempdir().unwrap();
    let o = probsense(
        &["sweep-vin", "--points", "5", "--ticks", "2000", "--source", "digital"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("sweep_vin.csv"));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.len() == 3 && (0.0..=1.0).contains(&r[1])));

    let o = probsense(&["sweep-slope", "--points", "3", "--ticks", "1000"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&dir.path().join("sweep_slope.csv")).len(), 3);

    let o = probsense(&["sweep-vin", "--ticks", "10"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "n_events = 2\nsource = \"digital\"\ntau_us = 250.0\nsync_hz = 2000.0\nupsample = 50\n").unwrap();
    let out = dir.path().join("out");
    let o = probsense(&["run", "--config", cfg.to_str().unwrap(), "--n-events", "3"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n_events"], 3);
    assert_eq!(report["config"]["activation"]["pneuron"]["source"], "digital_iid");
    assert_eq!(report["config"]["activation"]["pneuron"]["tau_s"], 250e-6);

    fs::write(&cfg, "bogus = 1\n").unwrap();
    let o = probsense(&["run", "--config", cfg.to_str().unwrap()], &out);
    assert!(!o.status.success());
}
