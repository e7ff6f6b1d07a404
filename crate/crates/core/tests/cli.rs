use std::fs;
use std::path::Path;
use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lrp-lab"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = lab().args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

fn body(dir: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    v["runtime_secs"] = 0.into();
    v["spec"]["out"] = serde_json::Value::Null;
    v
}

const QUICK_SELFTEST: &[&str] = &["sampler-selftest", "--trials", "2000", "--seed", "5"];

#[test]
fn passing_run_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = QUICK_SELFTEST.to_vec();
    args.extend(["--out", out.to_str().unwrap()]);
    let (code, text) = run(&args);
    assert_eq!(code, 0, "{text}");
    assert!(out.join("report.json").is_file());
    assert!(out.join("plots/sampler_selftest.csv").is_file());
    let raw: Vec<_> = fs::read_dir(out.join("raw")).unwrap().collect();
    assert!(!raw.is_empty());
    assert_eq!(body(&out)["verdict"], "pass");
}

#[test]
fn failing_threshold_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.json");
    fs::write(&cfg, r#"{"thresholds": {"r2_min": 1.5}}"#).unwrap();
    let mut args = QUICK_SELFTEST.to_vec();
    args.extend(["--config", cfg.to_str().unwrap()]);
    let (code, text) = run(&args);
    assert_eq!(code, 1, "{text}");
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(run(&["short-steps", "--epsilon", "1.5"]).0, 2);
    assert_eq!(run(&["short-steps", "--config", "/nonexistent/spec.json"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.json");
    fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(run(&["short-steps", "--config", cfg.to_str().unwrap()]).0, 2);
}

#[test]
fn same_seed_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let args = ["crossing-law", "--trials", "2000", "--seed", "9", "--out", d.to_str().unwrap()];
        let (code, text) = run(&args);
        assert!(code <= 1, "{text}");
    }
    assert_eq!(body(&a), body(&b));
    assert_eq!(
        fs::read_to_string(a.join("plots/crossing_law.csv")).unwrap(),
        fs::read_to_string(b.join("plots/crossing_law.csv")).unwrap()
    );
}

#[test]
fn defaults_subcommand_prints_spec() {
    let out = lab().args(["defaults", "coupling-errors"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["experiment"], "coupling_errors");
    assert_eq!(v["trials"], 200);
}
