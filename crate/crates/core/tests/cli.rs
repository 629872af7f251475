use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_front-stability-lab");

fn tiny_config(dir: &Path, model: &str) -> std::path::PathBuf {
    let weight = if model.contains("bistable") {
        r#""weight": {"fixed": {"alpha_minus": 0.2, "alpha_plus": 0.2}},"#
    } else {
        ""
    };
    let text = format!(
        r#"{{
  "model": {model},
  {weight}
  "simulation": {{"d": 2, "nz": 201, "half_length": 20.0, "ny": [16], "ly": [16.0],
                  "dt": 0.05, "t_end": 4.0, "output_stride": 10, "delta": 1.0}},
  "analysis": {{"samples": 4, "sample_ny": 16, "fit_window": {{"t_min": 1.0}}}},
  "output_dir": "{}",
  "seed": 3
}}"#,
        dir.join("out").display()
    );
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn run(config: &Path, stage: &str, extra: &[&str]) -> Output {
    Command::new(BIN)
        .args(["run", "--config", config.to_str().unwrap(), "--stage", stage])
        .args(extra)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn bistable_front_speed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), r#"{"kind": "bistable", "a": 0.7}"#);
    let out = run(&cfg, "front", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let front = json(&dir.path().join("out/front.json"));
    let c = front["c"].as_f64().unwrap();
    assert!((c - 0.28284).abs() < 1e-4, "{c}");
}

#[test]
fn combustion_spectrum_is_marginal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), r#"{"kind": "combustion", "epsilon": 0.0, "kappa": 0.5}"#);
    assert_eq!(run(&cfg, "front", &[]).status.code(), Some(0));
    assert_eq!(run(&cfg, "spectrum", &[]).status.code(), Some(0));
    let spec = json(&dir.path().join("out/spectrum.json"));
    assert_eq!(spec["essential_abscissa"].as_f64(), Some(0.0));
    assert!(dir.path().join("out/dispersion_alpha0_plus.csv").exists());
}

#[test]
fn missing_artifact_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), r#"{"kind": "bistable", "a": 0.7}"#);
    let out = run(&cfg, "simulate", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("front.json") && err.contains("`front`"), "{err}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"model": {"kind": "bistable", "a": 0.7}, "simulation": {"d": 2, "nz": 201, "half_length": 20.0,
            "ny": [16], "ly": [16.0], "dt": 0.05, "t_end": 1.0, "output_stride": 10, "delta": 1.0, "bogus": 1}}"#,
    )
    .unwrap();
    let out = run(&path, "front", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn unknown_stage_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), r#"{"kind": "bistable", "a": 0.7}"#);
    assert_eq!(run(&cfg, "everything", &[]).status.code(), Some(2));
}

#[test]
fn same_seed_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), r#"{"kind": "bistable", "a": 0.7}"#);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for target in [&a, &b] {
        let out = run(&cfg, "all", &["--out", target.to_str().unwrap(), "--seed", "11"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 10);
    for name in names {
        let (x, y) = (std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap());
        assert!(x == y, "{name:?} differs");
    }
}
