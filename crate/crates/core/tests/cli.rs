//! End-to-end runs of the `coca` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn coca(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coca"))
        .args(args)
        .current_dir(dir)
        .env_remove("COCA_OUTPUT_DIR")
        .output()
        .expect("spawn coca")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_is_bitwise_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--scheme", "2", "--n", "100", "--d", "100", "--r", "0.05", "--seed", "7",
    ];
    for sub in ["a", "b"] {
        let mut a = vec!["--output-dir", sub];
        a.extend(args);
        ok(&coca(dir.path(), &a));
    }
    let a = fs::read(dir.path().join("a/simulated.csv")).unwrap();
    let b = fs::read(dir.path().join("b/simulated.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 101);

    ok(&coca(
        dir.path(),
        &[
            "--output-dir",
            "c",
            "simulate",
            "--n",
            "100",
            "--d",
            "100",
            "--r",
            "0.05",
            "--seed",
            "8",
            "--scheme",
            "2",
        ],
    ));
    assert_ne!(fs::read(dir.path().join("c/simulated.csv")).unwrap(), b);
}

#[test]
fn simulate_writes_contamination_positions() {
    let dir = tempfile::tempdir().unwrap();
    ok(&coca(
        dir.path(),
        &[
            "simulate",
            "--n",
            "50",
            "--d",
            "20",
            "--r",
            "0.1",
            "--contamination-output",
            "pos.json",
        ],
    ));
    let pos: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("pos.json")).unwrap()).unwrap();
    assert_eq!(pos.as_array().unwrap().len(), 5 * 20);
    let m = manifest(&dir.path().join("simulate.manifest.json"));
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn config_precedence_per_field() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("sim.json"),
        r#"{"n": 30, "d": 24, "sparsity": 3, "seed": 5, "r": 0.1, "magnitude": 4.0, "scheme": 2}"#,
    )
    .unwrap();
    // each field: flag set, file set, neither
    let cases: [(&str, &str, &str, Value, Value); 6] = [
        ("n", "--n", "40", Value::from(40), Value::from(30)),
        ("d", "--d", "26", Value::from(26), Value::from(24)),
        ("sparsity", "--sparsity", "2", Value::from(2), Value::from(3)),
        ("seed", "--seed", "9", Value::from(9), Value::from(5)),
        ("r", "--r", "0.2", Value::from(0.2), Value::from(0.1)),
        (
            "magnitude",
            "--magnitude",
            "6",
            Value::from(6.0),
            Value::from(4.0),
        ),
    ];
    for (field, flag, value, with_flag, from_file) in cases {
        ok(&coca(
            dir.path(),
            &[
                "--config",
                "sim.json",
                "--output-dir",
                "f",
                "simulate",
                flag,
                value,
            ],
        ));
        assert_eq!(
            manifest(&dir.path().join("f/simulate.manifest.json"))["config"][field],
            with_flag,
            "{field}"
        );
        ok(&coca(
            dir.path(),
            &["--config", "sim.json", "--output-dir", "g", "simulate"],
        ));
        assert_eq!(
            manifest(&dir.path().join("g/simulate.manifest.json"))["config"][field],
            from_file,
            "{field}"
        );
    }
    ok(&coca(dir.path(), &["--output-dir", "h", "simulate", "--d", "30"]));
    let defaults = manifest(&dir.path().join("h/simulate.manifest.json"));
    assert_eq!(defaults["config"]["n"], 200);
    assert_eq!(defaults["config"]["sparsity"], 10);
    assert_eq!(defaults["config"]["scheme"], 1);
    assert_eq!(defaults["config"]["magnitude"], 5.0);
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_coca"))
        .args(["simulate", "--n", "10", "--d", "20"])
        .current_dir(dir.path())
        .env("COCA_OUTPUT_DIR", "from_env")
        .output()
        .unwrap();
    ok(&out);
    assert!(dir.path().join("from_env/simulated.csv").exists());
}

#[test]
fn estimate_then_sparse_pca() {
    let dir = tempfile::tempdir().unwrap();
    ok(&coca(
        dir.path(),
        &[
            "simulate",
            "--scheme",
            "2",
            "--n",
            "150",
            "--d",
            "30",
            "--sparsity",
            "5",
            "--seed",
            "3",
        ],
    ));
    ok(&coca(
        dir.path(),
        &[
            "estimate",
            "--input",
            "simulated.csv",
            "--header",
            "--output",
            "R.csv",
        ],
    ));
    let text = fs::read_to_string(dir.path().join("R.csv")).unwrap();
    assert_eq!(text.lines().count(), 30);
    ok(&coca(
        dir.path(),
        &[
            "estimate",
            "--input",
            "simulated.csv",
            "--header",
            "--method",
            "pearson",
            "--output",
            "P.json",
        ],
    ));
    let p: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("P.json")).unwrap()).unwrap();
    assert_eq!(p["kind"], "pearson");
    assert_eq!(p["d"], 30);

    ok(&coca(
        dir.path(),
        &["sparse-pca", "--input", "R.csv", "--k", "5", "--components", "2"],
    ));
    let res: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sparse_pca.json")).unwrap()).unwrap();
    let comps = res["components"].as_array().unwrap();
    assert_eq!(comps.len(), 2);
    assert_eq!(comps[0]["support"], serde_json::json!([0, 1, 2, 3, 4]));
}

#[test]
fn project_psd_writes_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.csv"), "1,1.2\n1.2,1\n").unwrap();
    ok(&coca(dir.path(), &["project-psd", "--input", "m.csv"]));
    let side: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("projected.json")).unwrap()).unwrap();
    assert!((side["achieved_distance"].as_f64().unwrap() - 0.1).abs() < 1e-3);
    assert!(side["min_eigenvalue"].as_f64().unwrap() >= -1e-8);
}

#[test]
fn small_experiment_outputs() {
    let dir = tempfile::tempdir().unwrap();
    ok(&coca(
        dir.path(),
        &[
            "experiment",
            "--n",
            "60",
            "--d",
            "20",
            "--sparsity",
            "4",
            "--replicates",
            "3",
            "--r",
            "0,0.05",
            "--estimators",
            "pearson,spearman",
        ],
    ));
    let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,n,r,estimator,mean,sd,replicates,excluded,oracle_delta"
    );
    assert_eq!(lines.count(), 4);
    assert!(dir.path().join("roc_scheme1_tpower_r0.05.csv").exists());
    let m = manifest(&dir.path().join("experiment.manifest.json"));
    assert_eq!(m["seed"], 0);
    assert_eq!(m["config"]["replicates"], 3);
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"n": 10, "bogus": 1}"#).unwrap();
    let out = coca(dir.path(), &["--config", "bad.json", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let out = coca(dir.path(), &["simulate", "--r", "1.5", "--d", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("r:") && err.contains("d:"), "{err}");
}

#[test]
fn numerical_failure_exits_3_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    // constant column: no rank correlation exists
    fs::write(dir.path().join("x.csv"), "1,2\n1,3\n1,5\n1,4\n").unwrap();
    let out = coca(dir.path(), &["--json-errors", "estimate", "--input", "x.csv"]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).expect("json on stderr");
    assert_eq!(err["exit_code"], 3);
    assert!(err["error"].as_str().is_some_and(|s| !s.is_empty()));
    assert!(err["message"].as_str().is_some_and(|s| !s.is_empty()));
}

#[test]
fn missing_values_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.csv"), "1,2\n3,\n4,5\n").unwrap();
    let out = coca(dir.path(), &["estimate", "--input", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing value"));
}
