use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_correlator"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn figure2_prints_conflict_and_final_beliefs() {
    let path = scenario_path("figure2.scenario");
    let out = run_cli(&["run", "--scenario", path.to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("0.409"), "missing pass-I conflict: {stdout}");
    assert!(stdout.contains("Bel(M) = 0.398"), "missing final Bel(M): {stdout}");
    assert!(stdout.contains("Route selected: detour"), "missing route: {stdout}");
}

#[test]
fn no_tests_forces_pass_iii_below_threshold() {
    let path = scenario_path("figure2.scenario");
    let out = run_cli(&["run", "--scenario", path.to_str().unwrap(), "--no-tests"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("Pass III: across-the-board discounting"),
        "pass III missing: {stdout}"
    );
    assert!(!stdout.contains("Pass II:"), "pass II ran: {stdout}");
    let conflict_line = stdout
        .lines()
        .filter(|l| l.contains("Conflict (mass assigned to null set)"))
        .last()
        .unwrap();
    let value: f64 = conflict_line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(value <= 0.25, "final conflict {value} above threshold");
}

#[test]
fn runs_are_byte_identical() {
    for name in [
        "figure2.scenario",
        "variant-close.scenario",
        "variant-lowcoverage.scenario",
    ] {
        let path = scenario_path(name);
        for format in ["table", "structured"] {
            let args = ["run", "--scenario", path.to_str().unwrap(), "--format", format];
            let a = run_cli(&args);
            let b = run_cli(&args);
            assert!(a.status.success());
            assert_eq!(a.stdout, b.stdout, "{name} {format} output differs");
        }
    }
}

#[test]
fn structured_output_is_json_with_stable_fields() {
    let path = scenario_path("figure2.scenario");
    let out = run_cli(&[
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["format"], "threatcorr-report v1");
    assert_eq!(json["scenario"], "figure2");
    let final_report = &json["final_report"];
    assert!((final_report["conflict"].as_f64().unwrap() - 0.246).abs() < 0.001);
    assert!(final_report["bel_moved"].is_number());
    assert!(json["steps"].as_array().unwrap().len() >= 2);
    assert_eq!(json["route"]["id"], "detour");
}

#[test]
fn threshold_flag_overrides_tau() {
    let path = scenario_path("figure2.scenario");
    // A threshold above the initial conflict stops after pass I.
    let out = run_cli(&[
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--threshold",
        "0.45",
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(!stdout.contains("Pass II:"), "pass II ran at tau 0.45: {stdout}");
}

#[test]
fn seed_flag_is_accepted_and_ignored() {
    let path = scenario_path("figure2.scenario");
    let a = run_cli(&["run", "--scenario", path.to_str().unwrap(), "--seed", "1"]);
    let b = run_cli(&["run", "--scenario", path.to_str().unwrap(), "--seed", "2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn parse_error_exits_2() {
    let dir = std::env::temp_dir().join("correlator-cli-tests");
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.scenario");
    fs::write(&path, "not a scenario file\n").unwrap();
    let out = run_cli(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8(out.stderr).unwrap().is_empty());
}

#[test]
fn validation_error_exits_3() {
    let dir = std::env::temp_dir().join("correlator-cli-tests");
    fs::create_dir_all(&dir).unwrap();
    let source = fs::read_to_string(scenario_path("figure2.scenario")).unwrap();
    let path = dir.join("badmass.scenario");
    fs::write(&path, source.replace("contour: 120 0.1", "contour: 120 0.15")).unwrap();
    let out = run_cli(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("bel2"), "diagnostic should name the table: {stderr}");
}

#[test]
fn total_conflict_exits_4() {
    let dir = std::env::temp_dir().join("correlator-cli-tests");
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join("contradiction.scenario");
    // Fully committed, mutually impossible evidence: distant fixes with a
    // tight movement bound, plus full belief in coverage (same threat).
    fs::write(
        &path,
        "threatcorr-scenario v1\n\n\
         [scenario]\nname: contradiction\n\n\
         [location first]\nid: bel1\ncenter: 0 0\ncontour: 1 1\n\n\
         [location second]\nid: bel2\ncenter: 2000 2000\ncontour: 1 1\n\n\
         [movement]\nid: bel3\ndiagonal: 0.3\nband: 0 5 0.7\n\n\
         [coverage]\nid: bel4\nsame: 1\n\n\
         [separation]\nid: bel5\nband: 60 inf 1\n",
    )
    .unwrap();
    let out = run_cli(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}
