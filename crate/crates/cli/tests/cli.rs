use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn decolab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_decolab"));
    cmd.args(args).env_remove("DECOLAB_OUT");
    if let Some(dir) = env_out {
        cmd.env("DECOLAB_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn version_prints_package_version() {
    let out = decolab(&["version"], None);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), format!("decolab {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn modes_scenario_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenarios_dir().join("modes.json");
    let out = decolab(&["run", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(), "--quiet"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let s = summary(tmp.path());
    assert_eq!(s["t_R"], 1.0);
    assert_eq!(s["t_D"], 0.5);
    let csv = fs::read_to_string(tmp.path().join("modes.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,value,deviation,linearized");
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn omnes_scenario_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenarios_dir().join("omnes.json");
    let out = decolab(&["run", cfg.to_str().unwrap(), "--quiet"], Some(tmp.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(tmp.path());
    assert_eq!(s["gamma_eff"], 1.0);
    assert_eq!(s["t_D"], 1.0);
    assert_eq!(s["t_R"], 100.0);
}

#[test]
fn out_flag_beats_environment() {
    let flag = tempfile::tempdir().unwrap();
    let env = tempfile::tempdir().unwrap();
    let cfg = scenarios_dir().join("modes.json");
    let out = decolab(&["run", cfg.to_str().unwrap(), "--out", flag.path().to_str().unwrap()], Some(env.path()));
    assert!(out.status.success());
    assert!(flag.path().join("summary.json").exists());
    assert!(!env.path().join("summary.json").exists());
}

#[test]
fn malformed_json_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.json", "{\"kind\": \"modes\",\n \"params\": [\n");
    let out_dir = tmp.path().join("out");
    let out = decolab(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line "));
    assert!(!out_dir.exists());
}

#[test]
fn missing_file_exits_4() {
    let out = decolab(&["run", "/nonexistent/decolab.json"], None);
    assert_eq!(out.status.code(), Some(4));
    let out = decolab(&["validate", "/nonexistent/decolab.json"], None);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unwritable_output_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = write(tmp.path(), "file", "not a directory");
    let cfg = scenarios_dir().join("modes.json");
    let out = decolab(&["run", cfg.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn numerical_failure_exits_3_without_outputs() {
    // no level decays, so the basis scenario has no effective rate
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "stuck.json",
        r#"{
            "kind": "basis",
            "params": {"levels": [{"c0": [1, 0], "energy": [0, 0]}, {"c0": [1, 0], "energy": [1, 0]}]},
            "time_grid": {"t_max": 1, "n_points": 3}
        }"#,
    );
    let out_dir = tmp.path().join("out");
    let out = decolab(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.join("summary.json").exists());
}

#[test]
fn validate_lists_violations() {
    for entry in fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        let out = decolab(&["validate", path.to_str().unwrap()], None);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }

    let tmp = tempfile::tempdir().unwrap();
    let overlapping = write(
        tmp.path(),
        "overlap.json",
        r#"{
            "kind": "bipart",
            "params": {
                "part1": {"level": 2, "form_factor": {"kind": "flat_band", "strength": 0.1, "support": [0, 6]}},
                "part2": {"level": 8, "form_factor": {"kind": "flat_band", "strength": 0.1, "support": [5, 20]}},
                "n_grid": 400
            },
            "time_grid": {"t_max": 10, "n_points": 11}
        }"#,
    );
    let out = decolab(&["validate", overlapping.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("  ")).collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].contains("a < b"));

    let negative = write(
        tmp.path(),
        "negative.json",
        r#"{"kind": "modes", "params": {"modes": [{"a0": 1, "gamma": -0.5}]}, "time_grid": {"t_max": 1, "n_points": 2}}"#,
    );
    let out = decolab(&["validate", negative.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("nonnegative"));
}
