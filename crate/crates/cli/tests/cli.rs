use std::path::Path;
use std::process::{Command, Output};

fn holab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holab"))
        .args(args)
        .env("HOLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn passing_run_exits_zero_and_prints_json() {
    let o = holab(&["holonomy", "--scenario", "sphere-lc", "--steps", "400", "--loops", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"], "holonomy");
    assert_eq!(v["passed"], true);
}

#[test]
fn failing_check_exits_two() {
    let o = holab(&["curvature", "--scenario", "so3-generic", "--steps", "400", "--sign-convention", "paper"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("FAIL"));
}

#[test]
fn bad_input_exits_one() {
    let o = holab(&["holonomy", "--scenario", "no-such-scenario"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
    let o = holab(&["reduce", "--scenario", "flat-torus"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_scenario_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, r#"{"schema_version": 1, "name": "broken"}"#).unwrap();
    let o = holab(&["transport", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("validation error"), "{}", stderr(&o));
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn out_dir_gets_report_tables_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["plaques", "--scenario", "magnetic-u1", "--steps", "400", "--out", out, "--format", "csv"];
    let o = holab(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let names = files(dir.path());
    assert!(names.contains(&"plaques-magnetic-u1.json".to_string()), "{names:?}");
    assert!(names.iter().any(|n| n.ends_with(".csv")), "{names:?}");
    assert!(names.iter().any(|n| n.ends_with(".svg")), "{names:?}");
    let listed = String::from_utf8(o.stdout).unwrap();
    assert_eq!(listed.lines().count(), names.len());
}

#[test]
fn repeated_runs_write_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = holab(&["axioms", "--scenario", "so3-generic", "--steps", "400", "--loops", "4", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let names = files(a.path());
    assert_eq!(names, files(b.path()));
    for n in names {
        assert_eq!(std::fs::read(a.path().join(&n)).unwrap(), std::fs::read(b.path().join(&n)).unwrap(), "{n}");
    }
}

#[test]
fn csv_to_stdout_prefixes_each_table() {
    let o = holab(&["transport", "--scenario", "flat-plane", "--steps", "400", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# "));
}

#[test]
fn unknown_command_is_a_usage_error() {
    let o = holab(&["integrate", "--scenario", "flat-plane"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("invalid value"));
}

#[test]
fn help_exits_zero_and_lists_builtins() {
    let o = holab(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("sphere-lc"));
}
