use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sprayopt::csvio::read_solution_set;
use sprayopt::pareto::{non_dominated_indices, pareto_filter};
use sprayopt::Direction;

fn sprayopt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sprayopt"))
        .args(args)
        .current_dir(dir)
        .env_remove("SPRAYOPT_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(line: &str) -> f64 {
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn predict_published_setting() {
    let dir = tempfile::tempdir().unwrap();
    let o = sprayopt(
        dir.path(),
        &["predict", "--all", "--pfr", "49.10", "--sod", "259.22", "--lambda", "0.84", "--cv", "101.01", "--tgf", "727.73"],
    );
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 8);
    let hardness = text.lines().find(|l| l.starts_with("hardness")).unwrap();
    assert!((value(hardness) / 604.71 - 1.0).abs() < 0.005, "{hardness}");
    assert!(hardness.ends_with("HV5"));
}

#[test]
fn predict_center_is_exp_intercept() {
    let dir = tempfile::tempdir().unwrap();
    let o = sprayopt(
        dir.path(),
        &["predict", "--model", "hardness", "--pfr", "60", "--sod", "230", "--lambda", "0.94", "--cv", "100", "--tgf", "683"],
    );
    assert!(o.status.success());
    assert!((value(&stdout(&o)) - 6.3520f64.exp()).abs() < 1e-3);
}

#[test]
fn predict_out_of_box_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = sprayopt(
        dir.path(),
        &["predict", "--model", "porosity", "--pfr", "90", "--sod", "230", "--lambda", "0.94", "--cv", "100", "--tgf", "683"],
    );
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sprayopt(dir.path(), &["predict", "--all"]).status.code(), Some(2));
    assert_eq!(
        sprayopt(dir.path(), &["predict", "--model", "nope", "--pfr", "60", "--sod", "230", "--lambda", "0.94", "--cv", "100", "--tgf", "683"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        sprayopt(dir.path(), &["optimize", "--problem", "IV", "--method", "nsga2", "--out", "x.csv"]).status.code(),
        Some(2)
    );
    assert_eq!(
        sprayopt(dir.path(), &["optimize", "--problem", "I", "--method", "nsga2", "--pop", "7", "--out", "x.csv"])
            .status
            .code(),
        Some(2)
    );
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn validate_default_passes_and_strict_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = sprayopt(dir.path(), &["validate"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.ends_with("INFO")).count(), 2);
    assert!(text
        .lines()
        .filter(|l| l.starts_with("II "))
        .all(|l| l.ends_with("PASS")));
    let strict = sprayopt(dir.path(), &["validate", "--strict", "0.001"]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(stdout(&strict)
        .lines()
        .filter(|l| l.starts_with("I "))
        .all(|l| l.ends_with("FAIL")));
}

#[test]
fn nsga_writes_csv_summary_manifest_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = sprayopt(
        dir.path(),
        &["optimize", "--problem", "I", "--method", "nsga2", "--pop", "20", "--gens", "10", "--seed", "7", "--svg", "--out", "front.csv"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("front.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "pfr,sod,lambda,cv,tgf,hardness,efficiency,rank,crowding");
    let set = read_solution_set(csv.as_bytes(), &[Direction::Maximize, Direction::Maximize]).unwrap();
    assert!(!set.is_empty());
    assert!(set.candidates().iter().all(|c| c.rank == Some(1)));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("front.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["method"], "nsga2");
    assert_eq!(manifest["resolved"]["methods"]["nsga2"]["population"], 20);
    assert!(manifest.get("wall_time_seconds").is_none());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("front.csv.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["front_size"], set.len());
    assert_eq!(summary["history"].as_array().unwrap().len(), 11);
    assert!(fs::read_to_string(dir.path().join("front.csv.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sprayopt"))
        .args(["optimize", "--problem", "I", "--method", "nsga2", "--pop", "8", "--gens", "2", "--out", "a.csv"])
        .current_dir(dir.path())
        .env("SPRAYOPT_SEED", "42")
        .output()
        .unwrap();
    assert!(o.status.success());
    sprayopt(
        dir.path(),
        &["optimize", "--problem", "I", "--method", "nsga2", "--pop", "8", "--gens", "2", "--seed", "42", "--out", "b.csv"],
    );
    assert_eq!(fs::read(dir.path().join("a.csv")).unwrap(), fs::read(dir.path().join("b.csv")).unwrap());
}

#[test]
fn timing_and_progress_are_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let o = sprayopt(
        dir.path(),
        &["optimize", "--problem", "I", "--method", "nsga2", "--pop", "8", "--gens", "3", "--progress", "--timing", "--out", "t.csv"],
    );
    assert!(o.status.success());
    let lines: Vec<serde_json::Value> = String::from_utf8_lossy(&o.stderr)
        .lines()
        .filter_map(|l| serde_json::from_str(l).ok())
        .collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[2]["generation"], 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t.csv.manifest.json")).unwrap()).unwrap();
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn weighted_sum_front_is_mutually_non_dominated() {
    let dir = tempfile::tempdir().unwrap();
    let o = sprayopt(dir.path(), &["optimize", "--problem", "I", "--method", "weighted-sum", "--seed", "7", "--out", "ws.csv"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("ws.csv")).unwrap();
    let set = read_solution_set(csv.as_bytes(), &[Direction::Maximize, Direction::Maximize]).unwrap();
    assert!(!set.is_empty() && set.len() <= 101);
    assert_eq!(non_dominated_indices(&set.canonical_points()).unwrap().len(), set.len());
}

#[test]
fn three_objective_svg_projections() {
    let dir = tempfile::tempdir().unwrap();
    let o = sprayopt(
        dir.path(),
        &["optimize", "--problem", "II", "--method", "nsga2", "--pop", "12", "--gens", "4", "--svg", "--out", "f.csv"],
    );
    assert!(o.status.success());
    for pair in ["hardness-efficiency", "hardness-temperature", "efficiency-temperature"] {
        assert!(dir.path().join(format!("f.csv.{pair}.svg")).exists(), "{pair}");
    }
}

#[test]
fn desirability_writes_json_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let o = sprayopt(
        dir.path(),
        &["optimize", "--problem", "II", "--method", "desirability", "--restarts", "10", "--seed", "1", "--out", "d.json"],
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("d.json")).unwrap()).unwrap();
    assert!(v["overall"].as_f64().unwrap() >= 0.0);
    assert_eq!(v["individual"].as_array().unwrap().len(), 3);
    assert!(v["decision"]["tgf"].as_f64().is_some());
    assert!(dir.path().join("d.json.manifest.json").exists());
}

#[test]
fn config_round_trip_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sprayopt(dir.path(), &["export", "--problem", "I", "--out", "spec.json"]).status.success());
    let common = ["--method", "nsga2", "--pop", "12", "--gens", "5", "--seed", "3"];
    let mut a = vec!["optimize", "--config", "spec.json", "--out", "a.csv"];
    a.extend(common);
    let mut b = vec!["optimize", "--problem", "I", "--out", "b.csv"];
    b.extend(common);
    assert!(sprayopt(dir.path(), &a).status.success());
    assert!(sprayopt(dir.path(), &b).status.success());
    assert_eq!(fs::read(dir.path().join("a.csv")).unwrap(), fs::read(dir.path().join("b.csv")).unwrap());
}

#[test]
fn registry_override_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let o = sprayopt(dir.path(), &["export", "--what", "registry"]);
    let text = stdout(&o).replacen("6.352", "7.352", 1);
    fs::write(dir.path().join("reg.json"), text).unwrap();
    let args = ["predict", "--model", "hardness", "--pfr", "60", "--sod", "230", "--lambda", "0.94", "--cv", "100", "--tgf", "683"];
    let base = value(&stdout(&sprayopt(dir.path(), &args)));
    let mut with = vec!["--registry", "reg.json"];
    with.extend(args);
    let changed = value(&stdout(&sprayopt(dir.path(), &with)));
    assert!((changed / base - 1.0_f64.exp()).abs() < 1e-6, "{base} {changed}");
}

#[test]
fn pareto_example_rows() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ex.csv"), "name,f1,f2\nA,2,8\nB,3,6\nC,4,5\nD,4,3\nE,6,4\nF,8,7\n").unwrap();
    let o = sprayopt(dir.path(), &["pareto", "--input", "ex.csv", "--objectives", "f1:max,f2:min"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "name,f1,f2\nD,4,3\nE,6,4\nF,8,7\n");
}

#[test]
fn pareto_malformed_rows_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "name,f1,f2\nA,2,8\nB,oops,6\nC,4,5\n").unwrap();
    let o = sprayopt(dir.path(), &["pareto", "--input", "bad.csv", "--objectives", "f1:max,f2:min"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[3]"));
}

#[test]
fn pareto_output_round_trips_as_solution_set() {
    let dir = tempfile::tempdir().unwrap();
    sprayopt(
        dir.path(),
        &["optimize", "--problem", "III", "--method", "nsga2", "--pop", "16", "--gens", "3", "--seed", "2", "--out", "f.csv"],
    );
    // A row worse than everything in every objective.
    let mut text = fs::read_to_string(dir.path().join("f.csv")).unwrap();
    text.push_str("60,230,0.94,100,683,1e6,1e6,1e6,,\n");
    fs::write(dir.path().join("g.csv"), &text).unwrap();
    let o = sprayopt(
        dir.path(),
        &["pareto", "--input", "g.csv", "--objectives", "porosity:min,roughness:min,temperature:min", "--out", "p.csv"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dirs = [Direction::Minimize; 3];
    let input = read_solution_set(text.as_bytes(), &dirs).unwrap();
    let filtered = read_solution_set(fs::read(dir.path().join("p.csv")).unwrap().as_slice(), &dirs).unwrap();
    assert_eq!(filtered, pareto_filter(&input).unwrap());
    assert!(filtered.len() < input.len());
}
