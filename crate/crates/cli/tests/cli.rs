use censored_newsvendor_cli::CliError;
use censored_newsvendor_cli::experiment::ExperimentConfig;
use std::path::Path;
use std::process::{Command, Output};

fn cnv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cnv"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout_of(out)).expect("stdout should be JSON")
}

fn write_dataset(dir: &Path, name: &str, sales: &[f64]) -> String {
    let file = serde_json::json!({
        "cost": {"b": 1.0, "h": 1.0},
        "cap": 100.0,
        "groups": [{"order_quantity": 10.0, "sales": sales}],
    });
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&file).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn smoke_config() -> String {
    format!("{}/../../configs/smoke.json", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn risk_reports_the_exponential_instance() {
    let out = cnv(&[
        "risk",
        "--distribution",
        "exponential(80)",
        "--lambda",
        "40.866",
        "--b",
        "1",
        "--h",
        "1",
        "--cap",
        "200",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["regime"], "unidentifiable");
    assert!((v["delta"].as_f64().unwrap() - 26.522).abs() < 1e-3);
    assert!((v["g_minus_lambda"].as_f64().unwrap() - 0.4).abs() < 1e-4);
    assert_eq!(v["q_dagger"], v["q_delta"]);
}

#[test]
fn risk_in_the_identifiable_regime_has_no_hedge() {
    let out = cnv(&[
        "risk",
        "--distribution",
        "exponential(80)",
        "--lambda",
        "150",
        "--cap",
        "200",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["regime"], "identifiable");
    assert_eq!(v["delta"], 0.0);
    assert!(v["q_dagger"].is_null());
}

#[test]
fn decide_reproduces_the_three_robust_branches() {
    let dir = tempfile::tempdir().unwrap();
    let visible = write_dataset(
        dir.path(),
        "visible.json",
        &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 10.0],
    );
    let split = write_dataset(
        dir.path(),
        "split.json",
        &[1.0, 2.0, 3.0, 4.0, 10.0, 10.0, 10.0, 10.0],
    );
    let hidden = write_dataset(dir.path(), "hidden.json", &[10.0; 8]);

    let cases = [
        (&visible, 4.0, "likely-identifiable"),
        (&split, 10.0, "knife-edge"),
        (&hidden, 55.0, "likely-unidentifiable"),
    ];
    for (path, quantity, branch) in cases {
        let out = cnv(&["decide", path, "--policy", "rcn"]);
        assert!(out.status.success(), "{}", stderr_of(&out));
        let v = stdout_json(&out);
        assert_eq!(v["quantity"].as_f64().unwrap(), quantity);
        assert_eq!(v["branch"], branch);
    }
}

#[test]
fn decide_rejects_unknown_policies_as_usage() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(dir.path(), "d.json", &[1.0]);
    let out = cnv(&["decide", &path, "--policy", "quantile"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("unknown policy"));
}

#[test]
fn decide_reports_json_errors_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"cost\": {\n").unwrap();
    let out = cnv(&["decide", path.to_str().unwrap(), "--policy", "rcn"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("line"), "{}", stderr_of(&out));
}

#[test]
fn decide_missing_file_is_a_runtime_failure() {
    let out = cnv(&["decide", "/definitely/not/here.json", "--policy", "rcn"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn decide_true_saa_needs_the_uncensored_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(dir.path(), "d.json", &[1.0, 2.0]);
    let out = cnv(&["decide", &path, "--policy", "true-saa"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("uncensored"));
}

#[test]
fn lower_bound_prints_the_hand_value_and_doubles_at_the_knife_edge() {
    let args = ["--b", "1", "--h", "1", "--lambda", "1", "--cap", "2", "--n", "1"];
    let out = cnv(&[&["lower-bound", "--regime", "id"], &args[..]].concat());
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["regime"], "strictly-identifiable");
    assert!((v["lower_bound"].as_f64().unwrap() - 0.006701).abs() < 1e-6);

    let out = cnv(&[&["lower-bound"], &args[..]].concat());
    assert!(out.status.success());
    let v = stdout_json(&out);
    let id = v["bounds"]["strictly-identifiable"].as_f64().unwrap();
    let ke = v["bounds"]["knife-edge"].as_f64().unwrap();
    assert_eq!(ke, 2.0 * id);
}

#[test]
fn regret_curve_pins_the_hedge_row() {
    let out = cnv(&[
        "regret-curve",
        "--distribution",
        "exponential(80)",
        "--lambda",
        "40.866",
        "--cap",
        "200",
        "--grid",
        "50",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "q,regret");
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (q, r) = l.split_once(',').unwrap();
            (q.parse().unwrap(), r.parse().unwrap())
        })
        .collect();
    // The hedge is an exact row and attains the minimum, which is the risk.
    let (q_min, r_min) = rows
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!((q_min - 67.388).abs() < 1e-3, "minimum at {q_min}");
    assert!((r_min - 26.522).abs() < 1e-3);
    assert!(rows.iter().all(|&(_, r)| r >= r_min));
}

#[test]
fn simulate_output_is_stable_across_jobs_and_reruns() {
    let config = smoke_config();
    let first = cnv(&["simulate", &config, "--jobs", "1"]);
    let second = cnv(&["simulate", &config, "--jobs", "4"]);
    let third = cnv(&["simulate", &config]);
    assert!(first.status.success(), "{}", stderr_of(&first));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, third.stdout);

    let reseeded = cnv(&["simulate", &config, "--seed", "99"]);
    assert!(reseeded.status.success());
    assert_ne!(first.stdout, reseeded.stdout);
}

#[test]
fn simulate_rejects_bad_configs_as_usage() {
    let dir = tempfile::tempdir().unwrap();
    let unknown_key = dir.path().join("unknown.json");
    std::fs::write(
        &unknown_key,
        r#"{"distribution": "uniform(0,100)", "b_values": [1.0], "h": 1.0,
            "lambda_grid": [30.0], "n_grid": [10], "replications": 1,
            "cap": 200.0, "plot": true}"#,
    )
    .unwrap();
    let out = cnv(&["simulate", unknown_key.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("plot"), "{}", stderr_of(&out));

    let both_grids = dir.path().join("both.json");
    std::fs::write(
        &both_grids,
        r#"{"distribution": "uniform(0,100)", "b_values": [1.0], "h": 1.0,
            "lambda_grid": [30.0], "lambda_fractions": [0.5], "n_grid": [10],
            "replications": 1, "cap": 200.0}"#,
    )
    .unwrap();
    let out = cnv(&["simulate", both_grids.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("not both"));
}

#[test]
fn ingest_feeds_decide_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let sales = dir.path().join("sales.csv");
    let mut csv = String::from("order_date,category,quantity\n");
    // Two business weeks, strictly increasing totals 10..=19.
    for (i, day) in [3, 4, 5, 6, 7, 10, 11, 12, 13, 14].iter().enumerate() {
        csv += &format!("2026-08-{day:02},widgets,{}\n", i + 10);
    }
    std::fs::write(&sales, csv).unwrap();
    let dataset = dir.path().join("dataset.json");

    let out = cnv(&[
        "ingest",
        sales.to_str().unwrap(),
        "--category",
        "widgets",
        "--lambda",
        "14.0",
        "--n",
        "60",
        "--include-uncensored",
        "--out",
        dataset.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));

    let decided = cnv(&["decide", dataset.to_str().unwrap(), "--policy", "rcn"]);
    assert!(decided.status.success(), "{}", stderr_of(&decided));
    let v = stdout_json(&decided);
    assert!(v["quantity"].as_f64().unwrap() >= 0.0);

    let conflicting = cnv(&[
        "ingest",
        sales.to_str().unwrap(),
        "--category",
        "widgets",
        "--lambda",
        "14.0",
        "--lambda-frac",
        "0.8",
        "--n",
        "60",
    ]);
    assert_eq!(conflicting.status.code(), Some(2));
}

#[test]
fn oracle_check_reports_the_summary_line() {
    let out = cnv(&["oracle-check", "--instances", "5", "--grid", "200", "--seed", "1"]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(stdout_of(&out).contains("5/5 instances within tolerance"));
}

#[test]
fn experiment_config_resolves_fractions_against_the_optimal_order() {
    let cfg = ExperimentConfig::from_json(
        r#"{"distribution": "uniform(0,100)", "b_values": [9.0], "h": 1.0,
            "lambda_fractions": [0.5, 1.2], "n_grid": [10], "replications": 2,
            "cap": 200.0}"#,
    )
    .unwrap();
    let sweep = cfg.to_sweep(None).unwrap();
    // rho = 0.9 makes the optimal order 90.
    assert_eq!(sweep.lambdas, vec![45.0, 108.0]);
    assert_eq!(sweep.policies.len(), 6, "all policies by default");
    assert_eq!(sweep.delta, 0.3, "default confidence level");
    assert_eq!(sweep.seed, 0);
    assert_eq!(sweep.num_groups, 2);

    let two_costs = ExperimentConfig::from_json(
        r#"{"distribution": "uniform(0,100)", "b_values": [1.0, 9.0], "h": 1.0,
            "lambda_fractions": [0.5], "n_grid": [10], "replications": 2,
            "cap": 200.0}"#,
    )
    .unwrap();
    match two_costs.to_sweep(None) {
        Err(CliError::Usage(msg)) => assert!(msg.contains("exactly one")),
        other => panic!("expected a usage error, got {other:?}"),
    }
    let sweep = cfg.to_sweep(Some(7)).unwrap();
    assert_eq!(sweep.seed, 7, "command line seed wins");
}
