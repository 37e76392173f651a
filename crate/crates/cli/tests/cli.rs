use std::fs;
use std::process::{Command, Output};

fn bdec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdec"))
        .args(args)
        .output()
        .expect("bdec runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn presets_are_listed() {
    let o = bdec(&["presets"]);
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.split_whitespace().next().unwrap().to_string())
        .collect();
    assert!(names.len() >= 8);
    assert!(names.contains(&"example1-bdec".to_string()));
    assert!(names.contains(&"skew20d-bdls".to_string()));
}

#[test]
fn shown_preset_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bdec(&["presets", "--show", "sur2d-lec"]);
    assert!(o.status.success());
    let path = tmp.path().join("sur.json");
    fs::write(&path, stdout(&o)).unwrap();
    let v = bdec(&["validate", "--config", path.to_str().unwrap()]);
    assert!(v.status.success(), "{}", stderr(&v));
    assert!(stdout(&v).ends_with(": ok\n"));
}

#[test]
fn invalid_config_exits_with_usage_code_and_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let shown = stdout(&bdec(&["presets", "--show", "example1-bdec"]));
    let mut v: serde_json::Value = serde_json::from_str(&shown).unwrap();
    v["sampler"]["dt"] = (-1.0).into();
    let path = tmp.path().join("bad.json");
    fs::write(&path, v.to_string()).unwrap();
    for cmd in ["validate", "run"] {
        let o = bdec(&[cmd, "--config", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{cmd}");
        assert!(stderr(&o).contains("dt"), "{cmd}: {}", stderr(&o));
    }
}

#[test]
fn unknown_preset_and_missing_file_are_usage_errors() {
    assert_eq!(bdec(&["run", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(
        bdec(&["validate", "--config", "/nonexistent/config.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(bdec(&["run"]).status.code(), Some(2));
}

#[test]
fn schema_is_json() {
    let o = bdec(&["schema"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["properties"]["sampler"].is_object());
}

fn small_config(dir: &std::path::Path) -> std::path::PathBuf {
    let shown = stdout(&bdec(&["presets", "--show", "example1-bdec"]));
    let mut v: serde_json::Value = serde_json::from_str(&shown).unwrap();
    v["sampler"]["n_particles"] = 100.into();
    v["sampler"]["iterations"] = 2.into();
    v["sampler"]["moves_per_iteration"] = 2.into();
    v["replicates"] = 1.into();
    v["reference_samples"] = 500.into();
    let path = dir.join("small.json");
    fs::write(&path, v.to_string()).unwrap();
    path
}

#[test]
fn run_applies_overrides_and_streams_progress() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let out = tmp.path().join("out");
    let o = bdec(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--algo",
        "bdls",
        "--seed",
        "9",
        "--reps",
        "2",
        "--workers",
        "1",
        "--snapshot-every",
        "1",
        "--progress",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2 * 5);
    for key in [
        "replicate",
        "iteration",
        "update",
        "modes_found",
        "acceptance_rate",
    ] {
        assert!(lines[0].get(key).is_some(), "{key}");
    }

    let written: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(written["sampler"]["algorithm"], "bdls");
    assert_eq!(written["sampler"]["seed"], 9);
    assert_eq!(written["replicates"], 2);
    assert_eq!(written["name"], "example1-bdls");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seeds"], serde_json::json!([9, 10]));
    assert!(out.join("rep1/ensemble_iter2.csv").exists());
    assert!(out.join("metrics_rep1.csv").exists());
}

#[test]
fn repeated_runs_write_identical_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let mut files = Vec::new();
    for (tag, workers) in [("a", "1"), ("b", "4")] {
        let out = tmp.path().join(tag);
        let o = bdec(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        files.push(fs::read(out.join("metrics_rep0.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}
