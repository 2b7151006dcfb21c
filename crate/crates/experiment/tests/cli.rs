use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DVector;
use tdoaspace::SensorArray;
use tdoaspace_experiment::ExperimentConfig;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdoaspace")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_tdoa(dir: &Path, x: &[f64]) -> PathBuf {
    let array = SensorArray::cross7(0.5).unwrap();
    let tau = array.tdoa_full(&DVector::from_row_slice(x)).unwrap();
    let path = dir.join("tdoa.json");
    let body = serde_json::json!({ "values": tau.values().as_slice() });
    std::fs::write(&path, body.to_string()).unwrap();
    path
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ExperimentConfig::load(&path).unwrap().validate().unwrap();
        seen += 1;
    }
    assert!(seen >= 3);
}

#[test]
fn locate_recovers_noiseless_source() {
    let dir = tempfile::tempdir().unwrap();
    let tdoa = write_tdoa(dir.path(), &[1.1, -0.4, 0.7]);
    for algo in ["ls", "srdls", "gs", "ml"] {
        let out = bin(&["locate", "--algo", algo, "--tdoa", tdoa.to_str().unwrap(), "--array", "cross7", "--denoise"]);
        let v = json(&out);
        let x: Vec<f64> = serde_json::from_value(v["x_hat"].clone()).unwrap();
        for (a, b) in x.iter().zip([1.1, -0.4, 0.7]) {
            assert!((a - b).abs() < 1e-8, "{algo}: {x:?}");
        }
    }
}

#[test]
fn denoise_with_missing_pairs_reconstructs() {
    let dir = tempfile::tempdir().unwrap();
    let tdoa = write_tdoa(dir.path(), &[-0.9, 0.2, 1.3]);
    let v = json(&bin(&["denoise", "--tdoa", tdoa.to_str().unwrap(), "--missing", "2-1,4-3"]));
    assert_eq!(v["subspace_dim"], 6);
    assert_eq!(v["values"].as_array().unwrap().len(), 19);
    assert_eq!(v["full"].as_array().unwrap().len(), 21);
}

#[test]
fn planar_invert_from_flags() {
    let v = json(&bin(&[
        "planar", "invert", "--sensors", "0,0;1,0;0,1", "--tau", "0,0",
    ]));
    let rec = &v[0];
    assert_eq!(rec["multiplicity"], 1);
    let s: Vec<[f64; 2]> = serde_json::from_value(rec["solutions"].clone()).unwrap();
    assert!((s[0][0] - 0.5).abs() < 1e-9 && (s[0][1] - 0.5).abs() < 1e-9);
}

#[test]
fn bad_input_exit_codes() {
    assert_eq!(bin(&["locate", "--algo", "nope"]).status.code(), Some(2));
    assert_eq!(bin(&["simulate", "--config", "/nonexistent.toml", "--out", "/tmp"]).status.code(), Some(2));
}
