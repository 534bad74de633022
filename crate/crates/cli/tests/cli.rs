use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pareto_forge::pareto::read_front_csv;
use pareto_forge::report::read_efficiency_csv;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pareto-forge")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fit_writes_diagnostics_into_new_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("nested/deeper");
    ok(&["fit", "--out", path_str(&out)]);
    let fit = json(&out.join("fit.json"));
    let ra = fit["ra"]["mapd"].as_f64().unwrap();
    let mrr = fit["mrr"]["mapd"].as_f64().unwrap();
    assert!((ra - 0.0235).abs() <= 0.002, "{ra}");
    assert!((mrr - 0.0518).abs() <= 0.005, "{mrr}");
    assert_eq!(fit["records"], 27);
    let baseline = fit["comparison"]["ra"]["mapd_b"].as_f64().unwrap();
    assert!((baseline - 0.0707).abs() <= 0.002);
    let csv = fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 28);
}

#[test]
fn fit_with_linear_published_models() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["fit", "--models", "eq21", "--out", path_str(tmp.path())]);
    let fit = json(&tmp.path().join("fit.json"));
    let ra = fit["ra"]["mapd"].as_f64().unwrap();
    assert!((ra - 0.0707).abs() <= 0.002, "{ra}");
    assert!(fit["ra"]["condition_estimate"].is_null());
}

#[test]
fn lexicographic_trace_has_two_identical_stages() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["optimize", "--method", "lexicographic", "--order", "mrr,ra", "--out", path_str(tmp.path())]);
    let out = json(&tmp.path().join("outcome_lexicographic.json"));
    let stages = out["lexicographic"]["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 2);
    assert_eq!(stages[0]["objective"], "MRR");
    assert_eq!(stages[1]["objective"], "Ra");
    let x0 = &stages[0]["solution"]["outcome"]["x_star"];
    let x1 = &stages[1]["solution"]["outcome"]["x_star"];
    for k in 0..3 {
        assert!((x0[k].as_f64().unwrap() - x1[k].as_f64().unwrap()).abs() < 1e-6);
    }
    assert!(out["counters"]["function_evals"].as_u64().unwrap() > 0);
}

#[test]
fn weighted_sum_front_rows() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["optimize", "--method", "weighted_sum", "--steps", "11", "--out", path_str(tmp.path())]);
    let text = fs::read(tmp.path().join("front_weighted_sum.csv")).unwrap();
    let (names, points) = read_front_csv::<f64, _>(text.as_slice()).unwrap();
    assert_eq!(names, vec!["ra", "mrr"]);
    assert_eq!(points.len(), 11);
    let distinct: BTreeSet<(i64, i64)> = points
        .iter()
        .map(|p| ((p.responses[0] * 1e4).round() as i64, p.responses[1].round() as i64))
        .collect();
    assert_eq!(distinct.len(), 3, "{distinct:?}");
    let svg = fs::read_to_string(tmp.path().join("front_weighted_sum.svg")).unwrap();
    assert!(svg.contains(r#"width="800" height="600""#));
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&["optimize", "--method", "all", "--seed", "7", "--out", path_str(a.path())]);
    ok(&["optimize", "--method", "all", "--seed", "7", "--out", path_str(b.path())]);
    let mut names: Vec<String> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"front_all.svg".to_string()));
    assert!(names.contains(&"outcome_genetic_algorithm.json".to_string()));
    for n in &names {
        assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(b.path().join(n)).unwrap(), "{n} differs");
    }
}

#[test]
fn compare_reports_every_routine() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(&["compare", "--out", path_str(tmp.path())]);
    assert!(stdout.contains("genetic_algorithm"));
    let rows = read_efficiency_csv(fs::File::open(tmp.path().join("efficiency.csv")).unwrap()).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.routine.as_str()).collect();
    assert_eq!(
        names,
        ["global_criterion", "lexicographic", "weighted_sum", "epsilon_constraint", "genetic_algorithm"]
    );
    assert!(rows.iter().all(|r| r.iterations > 0 && r.function_evals > 0));
    let ga = rows.last().unwrap().function_evals;
    assert_eq!(ga, 60 * 101 * 2);
    for r in &rows[..4] {
        assert!(ga > r.function_evals, "{} uses {} evaluations", r.routine, r.function_evals);
    }
    let merged = fs::read(tmp.path().join("front_all.csv")).unwrap();
    let (_, points) = read_front_csv::<f64, _>(merged.as_slice()).unwrap();
    let labels: BTreeSet<&str> = points.iter().map(|p| p.method.as_str()).collect();
    assert_eq!(labels.len(), 5, "{labels:?}");
    let svg = fs::read_to_string(tmp.path().join("front_all.svg")).unwrap();
    for n in names {
        assert!(svg.contains(&format!(r#"data-label="{n}""#)));
    }
}

#[test]
fn front_merges_existing_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = path_str(tmp.path());
    ok(&["optimize", "--method", "weighted_sum", "--out", dir]);
    ok(&["optimize", "--method", "epsilon_constraint", "--out", dir]);
    let stdout = ok(&["front", "--out", dir]);
    assert!(stdout.contains("from 2 file(s)"));
    let merged = fs::read(tmp.path().join("front_all.csv")).unwrap();
    let (_, points) = read_front_csv::<f64, _>(merged.as_slice()).unwrap();
    // three weighted-sum responses plus the ε point at 0.7107, duplicates collapsed
    assert_eq!(points.len(), 4, "{points:?}");
    assert!(tmp.path().join("front_all.svg").exists());
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    let out = tmp.path().join("o");
    fs::write(
        &cfg,
        format!(
            r#"{{"method": {{"method": "global_criterion", "p_values": [2, 20]}}, "out": "{}"}}"#,
            path_str(&out)
        ),
    )
    .unwrap();
    ok(&["optimize", "--config", path_str(&cfg), "--p", "2"]);
    let text = fs::read(out.join("front_global_criterion.csv")).unwrap();
    let (_, points) = read_front_csv::<f64, _>(text.as_slice()).unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0].param, "p=2");
}

#[test]
fn exit_codes_separate_config_from_numerical_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = path_str(tmp.path());

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"method": {"weight_steps": 1}}"#).unwrap();
    assert_eq!(run(&["optimize", "--config", path_str(&bad), "--out", dir]).status.code(), Some(2));
    assert_eq!(run(&["fit", "--data", "/nonexistent/runs.csv", "--out", dir]).status.code(), Some(2));

    // Two cutting speeds only: the squared-speed column is collinear.
    let mut csv = String::from("vc,fz,t,ra,mrr\n");
    for vc in [78, 314] {
        for fz in [0.04, 0.08, 0.16] {
            for t in [0.2, 0.4, 0.6] {
                csv.push_str(&format!("{vc},{fz},{t},1.0,{}\n", vc as f64 * fz * t * 100.0));
            }
        }
    }
    let data = tmp.path().join("two_speeds.csv");
    fs::write(&data, csv).unwrap();
    let out = run(&["fit", "--data", path_str(&data), "--out", dir]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_flags_out_of_bounds_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(&["validate"]);
    assert!(stdout.contains("27 records checked"));
    let data = tmp.path().join("runs.csv");
    fs::write(&data, "vc,fz,t,ra,mrr\n78,0.04,0.2,2.23,730\n400,0.04,0.2,1.0,730\n").unwrap();
    let out = run(&["validate", "--data", path_str(&data)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("record 2: vc above upper bound"));
}
