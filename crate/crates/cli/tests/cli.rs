use std::path::Path;
use std::process::{Command, Output};

fn oilbench(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oilbench"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("OILBENCH_OUT")
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    (header, r.records().map(|x| x.unwrap()).collect())
}

#[test]
fn run_writes_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = oilbench(
        &["run", "--preset", "toy_adversarial", "--algo", "ogd", "--eta", "0.05", "--seeds", "3,4", "--rounds", "15"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("toy_adversarial_ogd_seed3.csv"));
    assert_eq!(
        header,
        [
            "round",
            "env_steps",
            "loss",
            "avg_cumulative_loss",
            "cumulative_regret",
            "cumulative_reward",
            "eta_t",
            "sigma_t",
            "inner_iters",
            "solver_converged"
        ]
    );
    assert_eq!(rows.len(), 15);
    assert_eq!(&rows[14][0], "15");
    assert_eq!(rows[0][6].parse::<f64>().unwrap(), 0.05);

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    let runs = manifest["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[1]["seed"], 4);
    assert_eq!(runs[1]["rows"], 15);

    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("toy_adversarial_ogd_seed4.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 4);
    assert_eq!(meta["complete"], true);
    assert_eq!(meta["config_hash"], manifest["config_hash"]);
    assert!(meta.get("timings").is_none());
}

#[test]
fn timings_are_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        oilbench(&["run", "--preset", "toy_simple", "--seeds", "1", "--rounds", "3", "--record-timings"], dir.path());
    assert!(out.status.success());
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("toy_simple_ftl_seed1.json")).unwrap()).unwrap();
    assert_eq!(meta["timings"]["per_round_secs"].as_array().unwrap().len(), 3);
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_oilbench"))
        .args(["run", "--preset", "toy_simple", "--seeds", "1", "--rounds", "2"])
        .env("OILBENCH_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn config_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "preset = \"toy_simple\"\nname = \"mine\"\nalgo = \"adagrad\"\nalpha = 0.5\nrounds = 4\nseeds = [9]\n",
    )
    .unwrap();
    let out = oilbench(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.path().join("mine_adagrad_seed9.csv"));
    assert_eq!(rows.len(), 4);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "--preset", "no_such_preset"][..],
        &["run", "--preset", "toy_simple", "--algo", "sgd"],
        &["run", "--preset", "toy_simple", "--eta", "-1"],
        &["run", "--preset", "toy_simple", "--eta", "1", "--alpha", "1"],
        &["verify", "--suite", "everything"],
        &["verify", "--fault", "gremlins"],
    ] {
        let out = oilbench(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "preset = \"toy_simple\"\nlearning_rate = 3\n").unwrap();
    assert_eq!(oilbench(&["run", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn verify_passes_and_injected_fault_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ok = oilbench(&["verify", "--suite", "lemmas", "--seeds", "1"], dir.path());
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS"));
    assert!(dir.path().join("verify.json").exists());

    let bad = oilbench(&["verify", "--suite", "reformulation", "--seeds", "1", "--fault", "wrong_sigma"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
    let failures: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("verify_failures.json")).unwrap()).unwrap();
    let case = &failures.as_array().unwrap()[0];
    assert_eq!(case["passed"], false);
    assert!(case["replay"].is_object());
}

#[test]
fn tune_selects_a_grid_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = oilbench(
        &[
            "tune",
            "--preset",
            "toy_adversarial",
            "--algo",
            "ogd",
            "--seeds",
            "1",
            "--rounds",
            "20",
            "--pilot-interactions",
            "10",
            "--pilot-batch",
            "1",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("toy_adversarial_ogd_tune.json")).unwrap()).unwrap();
    let eta = t["selected_eta"].as_f64().unwrap();
    assert!(t["grid"].as_array().unwrap().iter().any(|g| g.as_f64() == Some(eta)));
    assert_eq!(t["ranking"].as_array().unwrap().len(), 11);
    assert!(t["finalists"].as_array().unwrap().len() <= 3);
}
