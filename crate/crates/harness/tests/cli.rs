use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soaa-bench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o) + &String::from_utf8_lossy(&o.stderr);
    assert!(text.contains("Usage"), "{text}");
}

#[test]
fn bad_values_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(&["run", "--problem", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = bench(&["run", "--optimizer", "soaa", "--lr", "-1", "--steps", "5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = bench(&["compare", "--config", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_from_config_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(
        concat!(env!("CARGO_MANIFEST_DIR"), "/configs/bench.json"),
        dir.path().join("bench.json"),
    )
    .unwrap();
    let o = bench(&["compare", "--config", "bench.json", "--steps", "200"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("results");
    for opt in ["soaa", "adam", "adamw"] {
        for seed in 0..3 {
            assert!(out.join(format!("quadratic_{opt}_seed{seed}.csv")).exists());
        }
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(
        summary.lines().next().unwrap(),
        "problem,optimizer,checkpoint_step,mean_loss,std_loss,diverged_count"
    );
    // checkpoints 0, 100, 200 for three optimizers
    assert_eq!(summary.lines().count(), 1 + 9);
    assert!(out.join("comparison.csv").exists());
    assert!(stdout(&o).contains("soaa: final loss"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"problem": {"name": "rosenbrock"}, "steps": 50, "seeds": [4],
            "optimizers": [{"name": "soaa"}]}"#,
    )
    .unwrap();
    let o = bench(
        &["run", "--config", "c.json", "--problem", "quadratic", "--steps", "20", "--out", "r"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("quadratic: 20 steps, seeds [4]"), "{text}");
    assert!(dir.path().join("r/quadratic_soaa_seed4.csv").exists());
}

#[test]
fn trace_matches_first_step_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(&["trace", "--problem", "quadratic", "--theta", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let value = |key: &str| -> f64 {
        let line = text
            .lines()
            .find(|l| l.split_whitespace().next() == Some(key))
            .unwrap_or_else(|| panic!("no {key} in {text}"));
        let v = line.split_whitespace().nth(1).unwrap();
        v.trim_matches(|c| c == '[' || c == ']').parse().unwrap()
    };
    // dim 1 quadratic with d = 1: loss 0.125, gradient 0.5
    assert_eq!(value("grad"), 0.5);
    assert!((value("m_hat") - 0.5).abs() < 1e-12);
    assert!((value("s_hat") - 0.25).abs() < 1e-12);
    assert!((value("g_adj") - 1.0).abs() < 1e-6);
    assert!((value("fisher") - 0.5).abs() < 1e-6);
    assert_eq!(value("dt"), 1.0);
}

#[test]
fn gradcheck_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let o = bench(&["gradcheck", "--problem", "tiny_mlp"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));
    let o = bench(&["gradcheck", "--problem", "logistic_regression", "--tolerance", "1e-30"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}
