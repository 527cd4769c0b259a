use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pareto-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

#[test]
fn oracle_small_cases() {
    let out = cli(&["oracle", "--n", "2", "--d", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let value = json(&out)["exact_E_nonpareto"].as_f64().unwrap();
    assert!((value - 0.5).abs() < 1e-12);

    let out = cli(&["oracle", "--n", "12", "--d", "1"]);
    let value = json(&out)["exact_E_nonpareto"].as_f64().unwrap();
    assert!((value - 11.0).abs() < 1e-9);
}

#[test]
fn regime_resolves_dimension() {
    let out = cli(&["oracle", "--n", "2000", "--regime", "star"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["d"], 22);
    let out = cli(&["oracle", "--n", "2000", "--regime", "star", "--c", "-2"]);
    assert_eq!(json(&out)["d"], 20);
}

#[test]
fn bad_input_exits_with_two() {
    for args in [
        vec!["simulate", "--n", "10", "--d", "x"],
        vec!["simulate", "--n", "10", "--d", "3", "--box", "0:0.5:1"],
        vec![
            "simulate", "--n", "10", "--d", "3", "--proj", "1,2", "--box", "0:1",
        ],
        vec!["oracle", "--n", "2", "--regime", "starstar"],
        vec!["sweep", "--n", "10", "--d-range", "1:4"],
        vec!["simulate", "--n", "10"],
    ] {
        let out = cli(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn unwritable_output_exits_with_three() {
    let out = cli(&[
        "simulate",
        "--n",
        "10",
        "--d",
        "3",
        "--reps",
        "5",
        "--out",
        "/nonexistent/dir/out.json",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn failed_assertion_exits_with_four() {
    // At d = 8 most of 200 points are dominated, far from the Poisson regime.
    let out = cli(&[
        "simulate", "--n", "200", "--d", "8", "--reps", "200", "--assert",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let out = cli(&["simulate", "--n", "200", "--d", "8", "--reps", "200"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn single_point_simulation() {
    let out = cli(&[
        "simulate", "--n", "1", "--d", "5", "--reps", "1", "--assert",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let record = &json(&out)["records"][0];
    assert_eq!(record["nonpareto"], 0);
    assert_eq!(record["layers"][0], 1);
}

#[test]
fn workers_do_not_change_bytes() {
    let args = [
        "simulate", "--n", "150", "--d", "10", "--reps", "40", "--seed", "9", "--box", "0:0.5",
    ];
    let one = cli(&[&args[..], &["--workers", "1"]].concat());
    let eight = cli(&[&args[..], &["--workers", "8"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, eight.stdout);
}

#[test]
fn csv_output_writes_records_and_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let out = cli(&[
        "simulate",
        "--n",
        "60",
        "--d",
        "6",
        "--reps",
        "12",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let records = std::fs::read_to_string(&path).unwrap();
    assert_eq!(records.lines().count(), 13);
    assert!(records.starts_with("replicate,n,nonpareto,k0"));
    let verdicts = std::fs::read_to_string(dir.path().join("run.verdicts.csv")).unwrap();
    assert!(verdicts.contains("mean_vs_oracle"));
}

#[test]
fn sweep_reports_rows() {
    let out = cli(&[
        "sweep",
        "--n",
        "120",
        "--d-range",
        "6:9",
        "--reps",
        "20",
        "--coupled",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let value = json(&out);
    assert_eq!(value["rows"].as_array().unwrap().len(), 4);
    assert_eq!(value["violations"], 0);
}

#[test]
fn plotdata_writes_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&[
        "plotdata",
        "--n",
        "500",
        "--d-range",
        "10:14",
        "--reps",
        "10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "nonpareto_oracle",
        "nonpareto_limit",
        "layer_1_oracle",
        "layer_2_limit",
        "nonpareto_empirical",
    ] {
        let text = std::fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 6, "{name}");
    }
}

#[test]
fn stein_chen_and_poissonized_runs() {
    let out = cli(&[
        "stein-chen",
        "--n",
        "100",
        "--d",
        "12",
        "--reps",
        "50",
        "--box",
        "0:0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["tv"].as_f64().is_some());
    let out = cli(&[
        "simulate",
        "--n",
        "100",
        "--d",
        "12",
        "--reps",
        "20",
        "--poissonized",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["config"]["poissonized"], true);
}
