//! End-to-end tests of the command-line interface: every command is run as a
//! subprocess against temporary directories.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nsgcca(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsgcca"))
        .args(args)
        .current_dir(dir)
        .env_remove("NSGCCA_THREADS")
        .output()
        .expect("failed to launch binary")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn simulate_tiny(dir: &Path, seed: u64) -> Vec<PathBuf> {
    let out = nsgcca(
        &[
            "simulate", "--model", "nonlinear", "--p", "6", "--n", "36", "--q", "2", "--seed",
            &seed.to_string(), "--out", "sim",
        ],
        dir,
    );
    assert_ok(&out);
    (1..=3).map(|k| dir.join("sim").join(format!("view{k}.csv"))).collect()
}

fn view_args(views: &[PathBuf]) -> Vec<String> {
    views.iter().map(|p| p.display().to_string()).collect()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsgcca(
        &["simulate", "--p", "5", "--n", "20", "--q", "2", "--seed", "9", "--out", "a"],
        dir.path(),
    );
    assert_ok(&out);
    let out = nsgcca(
        &["simulate", "--p", "5", "--n", "20", "--q", "2", "--seed", "9", "--out", "b"],
        dir.path(),
    );
    assert_ok(&out);
    for file in ["view1.csv", "view2.csv", "view3.csv"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical seeds");
    }
    let manifest = json(&dir.path().join("a/manifest.json"));
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["kind"], "manifest");
    assert_eq!(manifest["model"], "linear");
    assert_eq!(manifest["p"], 5);
    assert_eq!(manifest["signal_indices"], serde_json::json!([0, 1]));
}

#[test]
fn simulate_rejects_more_signals_than_variables() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsgcca(
        &["simulate", "--p", "3", "--n", "20", "--q", "5", "--out", "sim"],
        dir.path(),
    );
    assert_exit(&out, 2);
}

#[test]
fn fit_writes_schema_valid_solution() {
    let dir = tempfile::tempdir().unwrap();
    let views = simulate_tiny(dir.path(), 1);
    let views = view_args(&views);
    let mut args = vec!["fit", "--method", "ts-kgcca", "--budget", "1.5", "--out", "fit"];
    args.push("--views");
    args.extend(views.iter().map(String::as_str));
    let out = nsgcca(&args, dir.path());
    assert_ok(&out);
    let doc = json(&dir.path().join("fit/solution.json"));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["kind"], "solution");
    assert_eq!(doc["method"], "ts-kgcca");
    assert_eq!(doc["budget"], serde_json::json!([1.5, 1.5, 1.5]));
    let weights = doc["solution"]["weights"].as_array().unwrap();
    assert_eq!(weights.len(), 3);
    assert_eq!(weights[0].as_array().unwrap().len(), 6);
    assert!(doc["solution"]["objective"].as_f64().unwrap().is_finite());
    assert!(doc["wall_time_secs"].as_f64().unwrap() >= 0.0);
}

#[test]
fn huge_penalty_collapses_the_selection() {
    let dir = tempfile::tempdir().unwrap();
    let views = simulate_tiny(dir.path(), 2);
    let views = view_args(&views);
    let mut args = vec![
        "fit", "--method", "hsic-sgcca", "--lambda", "1000", "--out", "fit",
    ];
    args.push("--views");
    args.extend(views.iter().map(String::as_str));
    let out = nsgcca(&args, dir.path());
    assert_ok(&out);
    let doc = json(&dir.path().join("fit/solution.json"));
    let selected = doc["solution"]["selected"].as_array().unwrap();
    let counts: Vec<usize> = selected.iter().map(|v| v.as_array().unwrap().len()).collect();
    assert!(counts.iter().all(|&c| c <= 2), "selection not shrunk: {counts:?}");
    assert!(counts.iter().any(|&c| c == 0), "no view emptied: {counts:?}");
}

#[test]
fn corrupt_view_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let views = simulate_tiny(dir.path(), 3);
    std::fs::write(&views[1], "1.0,2.0\nnot-a-number-row,oops,3.0\n").unwrap();
    let views = view_args(&views);
    let mut args = vec!["fit", "--method", "ts-kgcca", "--budget", "1.5", "--out", "fit"];
    args.push("--views");
    args.extend(views.iter().map(String::as_str));
    let out = nsgcca(&args, dir.path());
    assert_exit(&out, 2);
}

#[test]
fn sample_count_mismatch_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let views = simulate_tiny(dir.path(), 4);
    std::fs::write(&views[2], "1.0,2.0,3.0\n4.0,5.0,6.0\n").unwrap();
    let views = view_args(&views);
    let mut args = vec!["fit", "--method", "ts-kgcca", "--budget", "1.5", "--out", "fit"];
    args.push("--views");
    args.extend(views.iter().map(String::as_str));
    let out = nsgcca(&args, dir.path());
    assert_exit(&out, 2);
}

#[test]
fn tune_records_full_cv_table_and_chosen_point() {
    let dir = tempfile::tempdir().unwrap();
    let views = simulate_tiny(dir.path(), 5);
    let views = view_args(&views);
    let mut args = vec![
        "tune", "--method", "ts-kgcca", "--grid", "1.5", "2.0", "--folds", "3", "--starts",
        "2", "--seed", "11", "--out", "tune",
    ];
    args.push("--views");
    args.extend(views.iter().map(String::as_str));
    let out = nsgcca(&args, dir.path());
    assert_ok(&out);
    let doc = json(&dir.path().join("tune/tuned.json"));
    assert_eq!(doc["kind"], "tuned");
    assert_eq!(doc["folds"], 3);
    assert_eq!(doc["starts"], 2);
    let chosen = doc["chosen_budget"].as_array().unwrap();
    assert_eq!(chosen.len(), 3);
    assert!(chosen.iter().all(|v| {
        let v = v.as_f64().unwrap();
        v == 1.5 || v == 2.0
    }));
    // starts x grid points x folds rows after the header.
    let table = std::fs::read_to_string(dir.path().join("tune/cv_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 2 * 3);
}

#[test]
fn tune_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let views = simulate_tiny(dir.path(), 6);
    let views = view_args(&views);
    let run = |out_dir: &str| {
        let mut args = vec![
            "tune", "--method", "sa-kgcca", "--grid", "1.2", "--folds", "3", "--starts", "1",
            "--seed", "7", "--threads", "1", "--out", out_dir,
        ];
        args.push("--views");
        args.extend(views.iter().map(String::as_str));
        let out = nsgcca(&args, dir.path());
        assert_ok(&out);
        json(&dir.path().join(out_dir).join("tuned.json"))
    };
    let a = run("t1");
    let b = run("t2");
    assert_eq!(a["chosen_budget"], b["chosen_budget"]);
    assert_eq!(a["cv_score"], b["cv_score"]);
    assert_eq!(a["solution"]["weights"], b["solution"]["weights"]);
}

#[test]
fn evaluate_reports_perfect_selection() {
    let dir = tempfile::tempdir().unwrap();
    simulate_tiny(dir.path(), 7);
    let solution = serde_json::json!({
        "schema_version": 1,
        "kind": "solution",
        "method": "ts-kgcca",
        "lambda": null,
        "budget": [1.5, 1.5, 1.5],
        "eps_reg": null,
        "solution": {
            "weights": [[1.0], [1.0], [1.0]],
            "selected": [[0, 1], [0], [1]],
            "objective": 0.5,
            "objective_trace": [0.5],
            "converged": true
        },
        "wall_time_secs": 0.0
    });
    std::fs::write(
        dir.path().join("solution.json"),
        serde_json::to_string(&solution).unwrap(),
    )
    .unwrap();
    let out = nsgcca(
        &[
            "evaluate", "--solution", "solution.json", "--manifest", "sim/manifest.json",
            "--out", "eval",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let doc = json(&dir.path().join("eval/metrics.json"));
    assert_eq!(doc["selection"]["f1"], 1.0);
    assert_eq!(doc["selection"]["success"], true);
    assert!(doc["cluster"].is_null());
    let csv = std::fs::read_to_string(dir.path().join("eval/metrics.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "f1,1"));
}

#[test]
fn evaluate_emits_cluster_block_and_checks_lengths() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("features.csv"),
        "0.0,0.1,10.0,10.1\n0.0,0.1,10.0,10.1\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("labels.csv"), "a\na\nb\nb\n").unwrap();
    let out = nsgcca(
        &[
            "evaluate", "--features", "features.csv", "--labels", "labels.csv", "--out",
            "eval",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let doc = json(&dir.path().join("eval/metrics.json"));
    assert!(doc["selection"].is_null());
    assert!(doc["cluster"]["silhouette"].as_f64().unwrap() > 0.9);
    // three labels for four samples
    std::fs::write(dir.path().join("labels.csv"), "a\na\nb\n").unwrap();
    let out = nsgcca(
        &[
            "evaluate", "--features", "features.csv", "--labels", "labels.csv", "--out",
            "eval2",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
}

#[test]
fn evaluate_without_targets_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsgcca(&["evaluate", "--out", "eval"], dir.path());
    assert_exit(&out, 2);
}

#[test]
fn study_emits_one_row_per_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsgcca(
        &[
            "study", "--setting", "i", "--p-list", "6", "--n-base", "30", "--q-base", "2",
            "--scale", "0.01", "--folds", "3", "--starts", "1", "--methods", "hsic-sgcca",
            "ts-kgcca", "--seed", "3", "--out", "study",
        ],
        dir.path(),
    );
    assert_ok(&out);
    let csv = std::fs::read_to_string(dir.path().join("study/study.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("method,model,setting,p,n,q,replication,seed,chosen_params,tp,fp"));
    // 1 p-value x 2 models x 2 methods x 1 replication.
    assert_eq!(lines.count(), 4);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let views = simulate_tiny(dir.path(), 8);
    let views_list = views
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(",");
    std::fs::write(
        dir.path().join("run.conf"),
        format!(
            "# defaults\nrun.method = ts-kgcca\nrun.views = {views_list}\nrun.out = fit_conf\nsolver.budget = 1.5\n"
        ),
    )
    .unwrap();
    let out = nsgcca(&["fit", "--config", "run.conf"], dir.path());
    assert_ok(&out);
    let doc = json(&dir.path().join("fit_conf/solution.json"));
    assert_eq!(doc["method"], "ts-kgcca");
    // The --method flag wins over the file entry.
    let out = nsgcca(
        &["fit", "--config", "run.conf", "--method", "hsic-sgcca", "--lambda", "0.01",
          "--out", "fit_flag"],
        dir.path(),
    );
    assert_ok(&out);
    let doc = json(&dir.path().join("fit_flag/solution.json"));
    assert_eq!(doc["method"], "hsic-sgcca");
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.conf"), "run.method ts-kgcca\n").unwrap();
    let out = nsgcca(&["fit", "--config", "bad.conf"], dir.path());
    assert_exit(&out, 4);
    std::fs::write(dir.path().join("bad2.conf"), "run.mystery = 1\n").unwrap();
    let out = nsgcca(&["fit", "--config", "bad2.conf"], dir.path());
    assert_exit(&out, 4);
}

#[test]
fn thread_env_variable_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let views = simulate_tiny(dir.path(), 9);
    let views = view_args(&views);
    let mut args = vec!["fit", "--method", "ts-kgcca", "--budget", "1.5", "--out", "fit"];
    args.push("--views");
    args.extend(views.iter().map(String::as_str));
    let out = Command::new(env!("CARGO_BIN_EXE_nsgcca"))
        .args(&args)
        .current_dir(dir.path())
        .env("NSGCCA_THREADS", "1")
        .output()
        .unwrap();
    assert_ok(&out);
    let out = Command::new(env!("CARGO_BIN_EXE_nsgcca"))
        .args(&args)
        .current_dir(dir.path())
        .env("NSGCCA_THREADS", "many")
        .output()
        .unwrap();
    assert_exit(&out, 4);
}
