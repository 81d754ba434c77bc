use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn kernmoment(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kernmoment")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

/// `(estimator, n, value)` rows of a moments CSV.
fn moments(dir: &Path, name: &str) -> Vec<(String, usize, f64)> {
    read(dir, name)
        .lines()
        .skip(2)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

fn assert_stamped(dir: &Path, name: &str, seed: u64) {
    let text = read(dir, name);
    let first = text.lines().next().unwrap();
    let hash = first
        .strip_prefix("# config_sha256=")
        .and_then(|rest| rest.strip_suffix(&format!(" seed={seed}")))
        .unwrap_or_else(|| panic!("{name} header: {first}"));
    assert_eq!(hash.len(), 64);
}

const NOISY: &str = r#"{
  "seed": 5,
  "generate": {
    "process": {"kind": "rff", "d": 3, "sigma": 0.25},
    "p": 12, "q": 9,
    "noise": {"kind": "row_column_correlated", "sigma_noise": 0.5, "trials": 2}
  },
  "estimate": {"manifest": "out/manifest.json", "n_max": 3, "estimators": ["dp", "dp-alt", "naive"]}
}"#;

#[test]
fn generate_is_deterministic_and_writes_a_manifest() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(dir, "run.json", NOISY);
    assert_eq!(code(&kernmoment(&["generate", "--config", "run.json", "--out", "out"], dir)), 0);
    let first: Vec<Vec<u8>> =
        (0..2).map(|t| fs::read(dir.join(format!("out/trial_{t}.csv"))).unwrap()).collect();
    let manifest = read(dir, "out/manifest.json");
    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(m["seed"], 5);
    assert_eq!(m["files"].as_array().unwrap().len(), 2);
    assert_eq!(first[0].iter().filter(|&&b| b == b'\n').count(), 12);

    assert_eq!(code(&kernmoment(&["generate", "--config", "run.json", "--out", "out"], dir)), 0);
    for (t, bytes) in first.iter().enumerate() {
        assert_eq!(&fs::read(dir.join(format!("out/trial_{t}.csv"))).unwrap(), bytes);
    }
    assert_eq!(read(dir, "out/manifest.json"), manifest);

    let other = kernmoment(&["generate", "--config", "run.json", "--out", "other", "--seed", "6"], dir);
    assert_eq!(code(&other), 0);
    assert_ne!(fs::read(dir.join("other/trial_0.csv")).unwrap(), first[0]);
    assert_ne!(json(dir, "other/manifest.json")["config_sha256"], m["config_sha256"]);
}

#[test]
fn binary_format_round_trips_through_estimate() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(dir, "run.json", &NOISY.replace(r#""trials": 2}"#, r#""trials": 2}, "format": "kmm1""#));
    assert_eq!(code(&kernmoment(&["generate", "--config", "run.json", "--out", "out"], dir)), 0);
    assert_eq!(&fs::read(dir.join("out/trial_1.kmm")).unwrap()[..4], b"KMM1");
    assert_eq!(code(&kernmoment(&["estimate", "--config", "run.json", "--out", "out"], dir)), 0);
    let rows = moments(dir, "out/moments.csv");
    for name in ["dp", "dp-alt2", "naive", "analytic"] {
        assert_eq!(rows.iter().filter(|r| r.0 == name).count(), 3, "{name}");
    }
    assert_stamped(dir, "out/moments.csv", 5);
    let out = json(dir, "out/moments.json");
    assert_eq!(out["trials"], 2);
    assert!(out["sequences"][0]["meta"]["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(out["ground_truth"]["estimator"], "analytic");
}

#[test]
fn all_ones_matrix_gives_unit_moments() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let row = ["1"; 5].join(",");
    write(dir, "ones.csv", &format!("{}\n", vec![row; 4].join("\n")));
    write(
        dir,
        "run.json",
        r#"{"estimate": {"inputs": ["ones.csv"], "n_max": 3,
            "estimators": ["naive", "kv-row", "kv-col", "exact2", "dp", "brute-increasing", "brute-all-paths"]}}"#,
    );
    let out = kernmoment(&["estimate", "--config", "run.json", "--out", "."], dir);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = moments(dir, "moments.csv");
    for (est, n, v) in &rows {
        if est == "dp" || est == "naive" {
            assert!((v - 1.0).abs() < 1e-12, "{est} m({n}) = {v}");
        }
    }
    assert_eq!(rows.iter().filter(|r| r.0 == "exact2").count(), 2);
    assert_eq!(rows.iter().filter(|r| r.0 == "dp").count(), 3);
}

#[test]
fn estimate_preconditions() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(dir, "m.csv", "1,2,3\n4,5,6\n");
    write(dir, "alt.json", r#"{"estimate": {"inputs": ["m.csv"], "n_max": 2, "estimators": ["dp-alt"]}}"#);
    assert_eq!(code(&kernmoment(&["estimate", "--config", "alt.json"], dir)), 3);
    write(dir, "big.json", r#"{"estimate": {"inputs": ["m.csv"], "n_max": 3}}"#);
    assert_eq!(code(&kernmoment(&["estimate", "--config", "big.json"], dir)), 3);
    write(dir, "missing.json", r#"{"estimate": {"inputs": ["nope.csv"], "n_max": 2}}"#);
    assert_eq!(code(&kernmoment(&["estimate", "--config", "missing.json"], dir)), 4);
    write(dir, "bad.csv", "1,2\n3\n");
    write(dir, "ragged.json", r#"{"estimate": {"inputs": ["bad.csv"], "n_max": 1}}"#);
    assert_eq!(code(&kernmoment(&["estimate", "--config", "ragged.json"], dir)), 4);
    let flags = ["estimate", "--config", "big.json", "--estimators", "bogus"];
    assert_eq!(code(&kernmoment(&flags, dir)), 2);
    let flags = ["estimate", "--config", "big.json", "--orientation", "sideways"];
    assert_eq!(code(&kernmoment(&flags, dir)), 2);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(dir, "typo.json", r#"{"sed": 1}"#);
    assert_eq!(code(&kernmoment(&["generate", "--config", "typo.json"], dir)), 2);
    write(dir, "empty.json", "{}");
    assert_eq!(code(&kernmoment(&["generate", "--config", "empty.json"], dir)), 2);
    write(
        dir,
        "bad.json",
        r#"{"generate": {"process": {"kind": "rff", "d": 2, "sigma_x": [1.0]}, "p": 3, "q": 3}}"#,
    );
    assert_eq!(code(&kernmoment(&["generate", "--config", "bad.json"], dir)), 2);
    write(dir, "notjson.json", "{");
    assert_eq!(code(&kernmoment(&["generate", "--config", "notjson.json"], dir)), 2);
    assert_eq!(code(&kernmoment(&["generate", "--config", "absent.json"], dir)), 4);
    assert_eq!(code(&kernmoment(&["reproduce", "--figure", "fig9"], dir)), 2);
    assert_eq!(code(&kernmoment(&["reproduce", "--figure", "fig2", "--scale", "1.5"], dir)), 2);
    assert_eq!(code(&kernmoment(&["reproduce"], dir)), 2);
}

const LINEAR: &str = r#"{"kind": "linear_gaussian", "d": 4, "scale": 0.5}"#;

#[test]
fn recover_from_exact_moments_has_zero_objective() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    // Linear process with eigenvalues 0.25: m(n) = 4 · 0.25ⁿ.
    let mut csv = String::from("estimator,n,value\n");
    for n in 1..=6 {
        csv.push_str(&format!("analytic,{n},{}\n", 4.0 * 0.25f64.powi(n)));
    }
    write(dir, "moments.csv", &csv);
    write(
        dir,
        "run.json",
        &format!(
            r#"{{"recover": {{"moments": "moments.csv", "estimator": "analytic", "d": 4, "b": 1.0,
                 "t_count": 100, "k": 6, "process": {LINEAR}}}}}"#
        ),
    );
    let out = kernmoment(&["recover", "--config", "run.json", "--out", "out"], dir);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(dir, "out/recovery.json");
    assert!(r["ours"]["objective"].as_f64().unwrap() < 1e-10);
    for v in r["ours"]["eigenvalues"].as_array().unwrap() {
        assert!((v.as_f64().unwrap() - 0.25).abs() < 1e-12);
    }
    assert_stamped(dir, "out/recovered.csv", 0);
    assert_stamped(dir, "out/density.csv", 0);
    let table = read(dir, "out/recovered.csv");
    let mut lines = table.lines().skip(1);
    assert_eq!(lines.next().unwrap(), "index,gt,svd,kv,ours");
    assert_eq!(lines.next().unwrap(), "1,0.25,,,0.25");

    write(
        dir,
        "more.json",
        r#"{"recover": {"moments": "moments.csv", "estimator": "analytic", "d": 4, "b": 1.0, "k": 7}}"#,
    );
    assert_eq!(code(&kernmoment(&["recover", "--config", "more.json"], dir)), 3);
    write(dir, "dp.json", r#"{"recover": {"moments": "moments.csv", "d": 4, "k": 2}}"#);
    assert_eq!(code(&kernmoment(&["recover", "--config", "dp.json"], dir)), 3);
}

#[test]
fn generate_estimate_recover_pipeline() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(
        dir,
        "run.json",
        &format!(
            r#"{{"seed": 2,
                "generate": {{"process": {LINEAR}, "p": 30, "q": 30}},
                "estimate": {{"manifest": "out/manifest.json", "n_max": 4, "estimators": ["kv-row", "dp"]}},
                "recover": {{"moments": "out/moments.csv", "d": 4, "k": 4, "matrix": "out/trial_0.csv",
                            "process": {LINEAR}}}}}"#
        ),
    );
    for cmd in ["generate", "estimate", "recover"] {
        let out = kernmoment(&[cmd, "--config", "run.json", "--out", "out"], dir);
        assert_eq!(code(&out), 0, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let r = json(dir, "out/recovery.json");
    assert_eq!(r["seed"], 2);
    assert_eq!(r["ground_truth"].as_array().unwrap().len(), 4);
    assert_eq!(r["svd"].as_array().unwrap().len(), 4);
    assert_eq!(r["baseline"]["estimator"], "kv-row");
    let header = read(dir, "out/recovered.csv");
    assert_eq!(header.lines().nth(1).unwrap(), "index,gt,svd,kv,ours");
    assert_eq!(r["config_sha256"], json(dir, "out/moments.json")["config_sha256"]);
}

#[test]
fn bench_writes_exponents() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(
        dir,
        "run.json",
        r#"{"bench": {"p_grid": [8, 16], "q_fixed": 8, "n_fixed": 3, "n_grid": [2, 3],
                      "p_square": 8, "p_orientation": 4}}"#,
    );
    let out = kernmoment(&["bench", "--config", "run.json", "--out", "b", "--repeats", "1"], dir);
    assert_eq!(code(&out), 0);
    let b = json(dir, "b/bench.json");
    assert!(b["p_exponent"].as_f64().unwrap().is_finite());
    assert_eq!(b["timings"].as_array().unwrap().len(), 8);
    assert_stamped(dir, "b/timings.csv", 0);
}

#[test]
fn reproduce_small_noise_table() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let args = [
        "reproduce",
        "--figure",
        "noise_table",
        "--scale",
        "0.2",
        "--replicates",
        "3",
        "--seed",
        "4",
        "--out",
        "r",
    ];
    let out = kernmoment(&args, dir);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_stamped(dir, "r/noise_table_moments.csv", 4);
    let table = read(dir, "r/noise_table_moments.csv");
    assert!(table.lines().nth(1).unwrap().contains("truth"));
    assert!(table.contains("dp-alt2"));
    let r = json(dir, "r/noise_table.json");
    assert_eq!(r["config"]["replicates"], 3);
    assert!(!dir.join("r/noise_table_errors.csv").exists());
}
