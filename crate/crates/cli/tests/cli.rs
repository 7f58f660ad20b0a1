use std::path::Path;
use std::process::{Command, Output};

const SMALL: &[&str] = &[
    "--set",
    "dataset.block_sizes=[12,12,12,12]",
    "--set",
    "dataset.p_intra=0.25",
    "--set",
    "dataset.train_frac=0.3",
    "--set",
    "epochs=10",
    "--set",
    "seeds=[1,2]",
    "--set",
    "attack.params.surrogate_epochs=20",
];

fn distpoison(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distpoison")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn run_small(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    distpoison(&args)
}

#[test]
fn gradcheck_passes() {
    let out = distpoison(&["gradcheck"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["max_rel_error"].as_f64().unwrap() < 1e-4);
}

#[test]
fn gradcheck_tolerance_failure_is_runtime() {
    let out = distpoison(&["gradcheck", "--tolerance", "0"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let o = out_dir.to_str().unwrap();
    for args in [
        vec!["run", "--out", o, "--set", "workers=0"],
        vec!["run", "--out", o, "--set", "no_such_key=1"],
        vec!["run", "--out", o, "--set", "novalue"],
        vec!["run", "--out", o, "--config", "/definitely/missing.toml"],
        vec!["run", "--set", "epochs=1"],
        vec!["bench", "--multipliers", "1,2"],
    ] {
        let out = distpoison(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(!out_dir.exists());
}

#[test]
fn bad_toml_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "workers = [").unwrap();
    let out = distpoison(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn run_writes_results_and_refuses_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = run_small(&out_dir, &["--parallel-seeds", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 2);
    assert_eq!(summary["config"]["epochs"], 10);
    assert!(out_dir.join("seed2_perturbations.json").exists());

    let again = run_small(&out_dir, &[]);
    assert_eq!(code(&again), 2);
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    assert_eq!(code(&run_small(&out_dir, &["--force"])), 0);
}

#[test]
fn config_file_and_override_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "epochs = 3\nseeds = [5]\n[attack]\nmethod = \"none\"\n").unwrap();
    let out_dir = dir.path().join("o");
    let out = distpoison(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "epochs=4",
        "--set",
        "dataset.block_sizes=[10,10,10,10]",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["epochs"], 4);
    assert_eq!(summary["runs"][0]["seed"], 5);
    assert_eq!(summary["runs"][0]["accuracy_drop"], 0.0);
}

#[test]
fn replay_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    assert_eq!(code(&run_small(&run_dir, &[])), 0);
    let replay_dir = dir.path().join("replay");
    let pert = run_dir.join("seed1_perturbations.json");
    let mut args = vec![
        "replay",
        "--perturbations",
        pert.to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        replay_dir.to_str().unwrap(),
    ];
    args.extend_from_slice(SMALL);
    let out = distpoison(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let load = |d: &Path| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(d.join("summary.json")).unwrap()).unwrap()
    };
    let (a, b) = (load(&run_dir), load(&replay_dir));
    assert_eq!(a["runs"][0]["attacked_accuracy"], b["runs"][0]["attacked_accuracy"]);
    assert_eq!(
        std::fs::read(run_dir.join("seed1_grad_poisoned.csv")).unwrap().len(),
        std::fs::read(replay_dir.join("seed1_grad_poisoned.csv")).unwrap().len()
    );
}

#[test]
fn missing_perturbation_file_is_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let out = distpoison(&[
        "replay",
        "--perturbations",
        "/definitely/missing.json",
        "--seed",
        "0",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bench_writes_report_with_fit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.json");
    let p = path.to_str().unwrap();
    let args = [
        "bench",
        "--set",
        "dataset.block_sizes=[6,6,6,6]",
        "--set",
        "dataset.train_frac=0.4",
        "--multipliers",
        "1,2,4",
        "--repeats",
        "1",
        "--out",
        p,
    ];
    let out = distpoison(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
    assert!(report["fit"]["r2"].is_f64());
    assert_eq!(code(&distpoison(&args)), 2);
}
