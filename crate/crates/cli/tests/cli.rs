use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const LINK: &str = r#"{"nodes": ["s", "d"], "edges": [["s", "d", 1.0]], "power": 1.0,
    "noise": {"s": {"family": "gaussian", "variance": 0.0}, "d": {"family": "gaussian", "variance": 1.0}},
    "demands": [["s", ["d"]]]}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noiseforge"))
}

fn setup(manifest: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("link.json"), LINK).unwrap();
    let path = dir.path().join("manifest.json");
    std::fs::write(&path, manifest).unwrap();
    (dir, path)
}

fn run(manifest: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("--manifest")
        .arg(manifest)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn missing_network_is_reported_with_its_path() {
    let (dir, m) = setup(r#"{"network": "nowhere.json", "experiment": "noise-lab", "seed": 1}"#);
    let out = run(&m, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.json"));
}

#[test]
fn malformed_manifest_exits_two() {
    for text in [
        "{not json",
        r#"{"network": "link.json", "experiment": "noise-lab"}"#,
        r#"{"network": "link.json", "experiment": "noise-lab", "seed": 1, "bogus": 3}"#,
        r#"{"network": "link.json", "experiment": "teleport", "seed": 1}"#,
    ] {
        let (dir, m) = setup(text);
        assert_eq!(run(&m, dir.path(), &[]).status.code(), Some(2), "{text}");
    }
}

#[test]
fn gaussian_noise_lab_succeeds() {
    let (dir, m) = setup(r#"{"network": "link.json", "experiment": "noise-lab", "seed": 3, "trials": 20000}"#);
    let out = run(&m, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("noise-lab.csv")).unwrap();
    assert!(csv.starts_with("family,sigma2,b,bin,trials,ks,critical,variance,pass"));
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn failing_check_exits_one() {
    // at α near 1 the critical value is tiny and a correct Gaussian fails
    let (dir, m) = setup(
        r#"{"network": "link.json", "experiment": "noise-lab", "seed": 3, "trials": 2000, "alpha": 0.999}"#,
    );
    assert_eq!(run(&m, dir.path(), &[]).status.code(), Some(1));
}

#[test]
fn transform_has_one_row_per_bin() {
    let (dir, m) = setup(
        r#"{"network": "link.json", "experiment": "transform", "seed": 4, "trials": 2000, "b_list": [2, 4, 8]}"#,
    );
    let out = run(&m, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("transform.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 + 4 + 8);
}

#[test]
fn outputs_are_identical_across_runs_and_threads() {
    let (dir, m) = setup(
        r#"{"network": "link.json", "experiment": "transform", "seed": 5, "trials": 5000, "b_list": [4, 16]}"#,
    );
    let mut outputs = Vec::new();
    for threads in ["1", "4", "1", "4"] {
        let out_dir = dir.path().join(format!("out{}", outputs.len()));
        std::fs::create_dir(&out_dir).unwrap();
        assert_eq!(run(&m, &out_dir, &["--threads", threads]).status.code(), Some(0));
        outputs.push((
            std::fs::read(out_dir.join("transform.csv")).unwrap(),
            std::fs::read(out_dir.join("summary.json")).unwrap(),
        ));
    }
    assert!(outputs.iter().all(|o| *o == outputs[0]));
}

#[test]
fn seed_and_trial_overrides_apply() {
    let (dir, m) = setup(r#"{"network": "link.json", "experiment": "simulate", "seed": 6, "trials": 1000}"#);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    std::fs::create_dir(&a).unwrap();
    std::fs::create_dir(&b).unwrap();
    assert_eq!(run(&m, &a, &["--trials", "3000"]).status.code(), Some(0));
    assert_eq!(run(&m, &b, &["--trials", "3000", "--seed", "7"]).status.code(), Some(0));
    let ca = std::fs::read_to_string(a.join("simulate.csv")).unwrap();
    let cb = std::fs::read_to_string(b.join("simulate.csv")).unwrap();
    assert!(ca.contains(",3000,"));
    assert_ne!(ca, cb);
}

#[test]
fn json_report() {
    let (dir, m) = setup(
        r#"{"network": "link.json", "experiment": "noise-lab", "seed": 8, "trials": 5000, "b_list": [4]}"#,
    );
    assert_eq!(run(&m, dir.path(), &["--format", "json"]).status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("noise-lab.json")).unwrap();
    assert!(text.trim_start().starts_with('['), "{text}");
    assert!(text.contains("\"family\""));
}
