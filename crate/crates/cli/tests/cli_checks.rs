//! CLI plumbing checks: schema round-trips, deterministic re-runs, data-error
//! handling before training, process exit codes, and output-dir resolution.

use relustab::dataset::{idx_images_bytes, idx_labels_bytes};
use relustab_cli::report::{config_hash, run_rows_csv, RUN_COLUMNS};
use relustab_cli::runs::{synthetic_sweep, CmdError, Flattest, MnistSpec, SweepSpec};
use std::process::Command;

fn micro_spec() -> SweepSpec {
    SweepSpec {
        n: 8,
        d: 2,
        k: 4,
        etas: vec![0.02, 0.05],
        seeds: vec![0, 1],
        max_steps: 30_000,
        flattest: Flattest::Off,
        data_seed: 7,
        ..SweepSpec::default()
    }
}

#[test]
fn csv_round_trips_through_a_parser() {
    let spec = micro_spec();
    let hash = config_hash("sweep", &serde_json::to_value(&spec).unwrap());
    let rows = synthetic_sweep(&spec, &hash).unwrap();
    assert_eq!(rows.len(), 4);
    let csv_text = run_rows_csv(&rows);
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.len(), RUN_COLUMNS.len());
    for (got, want) in headers.iter().zip(RUN_COLUMNS) {
        assert_eq!(got, want);
    }
    let mut n = 0;
    for (rec, row) in reader.records().zip(&rows) {
        let rec = rec.unwrap();
        assert_eq!(rec.get(0).unwrap(), row.run_id);
        let eta: f64 = rec.get(1).unwrap().parse().unwrap();
        assert_eq!(eta, row.eta, "floats survive the round trip exactly");
        let steps: usize = rec.get(6).unwrap().parse().unwrap();
        assert_eq!(steps, row.steps);
        n += 1;
    }
    assert_eq!(n, rows.len());
}

#[test]
fn identical_config_reruns_are_byte_identical() {
    let spec = micro_spec();
    let hash = config_hash("sweep", &serde_json::to_value(&spec).unwrap());
    let a = run_rows_csv(&synthetic_sweep(&spec, &hash).unwrap());
    let b = run_rows_csv(&synthetic_sweep(&spec, &hash).unwrap());
    assert_eq!(a, b);
    assert!(a.lines().count() > 1);
}

#[test]
fn corrupt_idx_magic_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let mut img_bytes = idx_images_bytes(&[vec![0u8; 4], vec![255u8; 4]], 2, 2);
    img_bytes[2] = 0x99;
    let lbl_bytes = idx_labels_bytes(&[0, 1]);
    let img_path = dir.path().join("images.idx");
    let lbl_path = dir.path().join("labels.idx");
    std::fs::write(&img_path, img_bytes).unwrap();
    std::fs::write(&lbl_path, lbl_bytes).unwrap();
    let spec = MnistSpec::new(img_path, lbl_path);
    let err = relustab_cli::runs::mnist_sweep(&spec, "h").unwrap_err();
    assert!(matches!(err, CmdError::Data(_)), "got {err}");
    assert!(err.to_string().contains("0x00000803"), "got {err}");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relustab"))
}

#[test]
fn exit_codes_distinguish_config_and_data_errors() {
    let out = bin()
        .args(["sweep", "--etas=-0.5", "--seeds", "1", "--max-steps", "1000"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "negative eta is a config error");

    let out = bin()
        .args([
            "mnist",
            "--mnist-images",
            "/nonexistent/images.idx",
            "--mnist-labels",
            "/nonexistent/labels.idx",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "missing files are a data error");
}

#[test]
fn unknown_config_file_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 6, "unknown_knob": 1}"#).unwrap();
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_emits_one_row_to_stdout() {
    let out = bin()
        .args([
            "train", "--eta", "0.05", "--n", "6", "--d", "2", "--k", "3", "--max-steps",
            "30000", "--flattest", "off",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), RUN_COLUMNS.join(","));
    let row = lines.next().expect("one data row");
    assert_eq!(row.split(',').count(), RUN_COLUMNS.len());
    assert!(lines.next().is_none());
}

#[test]
fn out_dir_env_var_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "sweep", "--etas", "0.05", "--seeds", "1", "--n", "6", "--d", "2", "--k", "3",
            "--max-steps", "20000", "--flattest", "off", "--out", "rows.csv",
        ])
        .env("RELUSTAB_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    assert!(rows.starts_with("run_id,"));
    let manifest = std::fs::read_to_string(dir.path().join("rows.manifest.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(parsed["command"], "sweep");
    assert_eq!(parsed["config"]["n"], 6);
    assert!(parsed["config_hash"].as_str().unwrap().len() == 64);
}
