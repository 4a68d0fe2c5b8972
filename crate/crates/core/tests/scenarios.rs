use serde_json::Value;

use holab::holonomy::holonomy_family;
use holab::report::{emit_plots, write_report, Table};
use holab::run::{run_command, Command, Params};
use holab::scenario::{builtin_names, builtin_source, load_scenario, Expectation, Scenario};
use holab::HolabError;

fn builtin_doc(name: &str) -> Value {
    serde_json::from_str(builtin_source(name).expect("builtin")).expect("valid json")
}

fn validation_path(doc: &Value) -> String {
    match Scenario::from_json(&doc.to_string()) {
        Err(HolabError::Validation { path, .. }) => path,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

fn quick() -> Params {
    Params {
        steps: 200,
        loops: Some(4),
        ..Params::default()
    }
}

#[test]
fn every_builtin_loads_with_its_expectations() {
    for name in builtin_names() {
        let s = Scenario::builtin(name).unwrap();
        assert_eq!(s.name, name);
        assert!(!s.expectations.is_empty(), "{name} declares no checkable expectation");
        for e in &s.expectations {
            if let Expectation::HolonomyAngle { family, .. } = e {
                assert!(s.family(family).is_some(), "{name}: unknown family {family}");
            }
        }
    }
}

#[test]
fn missing_group_names_the_field() {
    let mut doc = builtin_doc("sphere-lc");
    doc.as_object_mut().unwrap().remove("group");
    assert_eq!(validation_path(&doc), "$.group");
}

#[test]
fn unknown_group_is_rejected() {
    let mut doc = builtin_doc("sphere-lc");
    doc["group"] = "Sp(4)".into();
    assert_eq!(validation_path(&doc), "$.group");
}

#[test]
fn unsupported_schema_version_is_rejected() {
    let mut doc = builtin_doc("flat-plane");
    doc["schema_version"] = 99.into();
    assert_eq!(validation_path(&doc), "$.schema_version");
}

#[test]
fn expectation_with_unknown_family_is_rejected() {
    let mut doc = builtin_doc("flat-plane");
    doc["expected"][1]["family"] = "spirals".into();
    assert!(validation_path(&doc).ends_with(".family"));
}

#[test]
fn unknown_name_is_an_input_error() {
    assert!(matches!(load_scenario("no-such-scenario"), Err(HolabError::Input(_))));
}

#[test]
fn scenario_file_round_trips_through_the_loader() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("torus.json");
    std::fs::write(&path, builtin_source("flat-torus").unwrap()).unwrap();
    let s = load_scenario(path.to_str().unwrap()).unwrap();
    assert_eq!(s.name, "flat-torus");
    assert_eq!(s.homotopies.len(), 4);
}

#[test]
fn torus_winding_holonomies_multiply() {
    let s = Scenario::builtin("flat-torus").unwrap();
    let first = |name: &str| s.family(name).unwrap().loops[..1].to_vec();
    let h = |name: &str| holonomy_family(&s.connection, &first(name), 1000).unwrap()[0].element.clone();
    let (a, b, ab) = (h("winding (1,0)"), h("winding (0,1)"), h("winding (1,1)"));
    assert!(ab.distance(&(&a * &b)) <= 1e-9);
    assert!(ab.distance(&(&b * &a)) <= 1e-9);
    let angle = ab.matrix()[(1, 0)].atan2(ab.matrix()[(0, 0)]);
    assert!((angle + 1.0).abs() <= 1e-9, "angle {angle}");
}

#[test]
fn reports_are_deterministic() {
    let s = Scenario::builtin("magnetic-u1").unwrap();
    for cmd in [Command::Holonomy, Command::Curvature] {
        let a = run_command(cmd, &s, &quick()).unwrap().to_json().unwrap();
        let b = run_command(cmd, &s, &quick()).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("timing"));
    }
}

#[test]
fn invalid_params_are_rejected_before_running() {
    let s = Scenario::builtin("flat-plane").unwrap();
    for params in [
        Params { steps: 1, ..quick() },
        Params { tol: 0.0, ..quick() },
        Params { loops: Some(0), ..quick() },
    ] {
        assert!(run_command(Command::Holonomy, &s, &params).is_err());
    }
}

#[test]
fn reduce_without_an_embedding_is_a_precondition_error() {
    let s = Scenario::builtin("so3-generic").unwrap();
    let err = run_command(Command::Reduce, &s, &quick()).unwrap_err();
    assert!(err.to_string().contains("precondition"), "{err}");
}

#[test]
fn written_reports_name_files_by_command_and_scenario() {
    let s = Scenario::builtin("flat-plane").unwrap();
    let report = run_command(Command::Transport, &s, &quick()).unwrap();
    assert!(report.passed);
    let dir = tempfile::tempdir().unwrap();
    let files = write_report(&report, dir.path(), true).unwrap();
    assert!(files.iter().any(|f| f.ends_with("transport-flat-plane.json")));
    assert!(files.iter().filter(|f| f.extension().is_some_and(|e| e == "csv")).count() == report.tables.len());
    let text = std::fs::read_to_string(dir.path().join("transport-flat-plane.json")).unwrap();
    assert_eq!(text, report.to_json().unwrap());
}

#[test]
fn empty_plot_table_warns_instead_of_writing() {
    let s = Scenario::builtin("flat-plane").unwrap();
    let mut report = run_command(Command::Transport, &s, &quick()).unwrap();
    report.tables = vec![Table::new("nothing", &["x", "y"]).with_plot("nothing", 0, &[1], false)];
    let dir = tempfile::tempdir().unwrap();
    let (files, warnings) = emit_plots(&report, dir.path()).unwrap();
    assert!(files.is_empty());
    assert_eq!(warnings.len(), 1);
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}
