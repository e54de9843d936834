use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TC: &str = "replicas = 6\nseed = 9\n[experiment]\nkind = \"time-constant\"\ndirection = [1, 0]\nn = [16, 32]\n";

fn lab(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fpp-lab"));
    c.args(args).env_remove("FPP_LAB_THREADS");
    if let Some(t) = threads {
        c.env("FPP_LAB_THREADS", t);
    }
    c.output().unwrap()
}

fn config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn invalid_parameter_exits_2_without_files() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), &format!("{TC}[distribution]\nkind = \"exponential\"\nrate = 0.0\n"));
    let out = d.path().join("out");
    let o = lab(&["time-constant", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rate"));
    assert!(!out.exists());
}

#[test]
fn subcommand_must_match_the_config() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), TC);
    let o = lab(&["sigma", "--config", &cfg, "--out", d.path().join("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_1() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), &format!("{TC}[options]\nsite_cap = 10\n"));
    let o = lab(&["run", "--config", &cfg, "--out", d.path().join("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_is_identical_across_thread_counts() {
    let d = tempfile::tempdir().unwrap();
    let cfg = config(d.path(), TC);
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert!(lab(&["run", "--config", &cfg, "--threads", "1", "--out", a.to_str().unwrap()], None).status.success());
    // thread count taken from the environment
    assert!(lab(&["run", "--config", &cfg, "--out", b.to_str().unwrap()], Some("8")).status.success());
    let ja = fs::read(a.join("time-constant.jsonl")).unwrap();
    assert_eq!(ja, fs::read(b.join("time-constant.jsonl")).unwrap());
    // a seed override is a different experiment
    assert!(lab(&["run", "--config", &cfg, "--seed", "10", "--out", a.to_str().unwrap()], None).status.success());
    let both = fs::read(a.join("time-constant.jsonl")).unwrap();
    assert!(both.starts_with(&ja) && both.len() > ja.len());
}

#[test]
fn verify_suites_report_per_check() {
    let o = lab(&["verify", "--suite", "oracle", "--seeds", "2"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().count() >= 18 && text.lines().all(|l| l.starts_with("PASS")));
    let bad = lab(&["verify", "--suite", "metric", "--inject-fault"], None);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL triangle inequality"));
    assert_eq!(lab(&["verify", "--suite", "nope"], None).status.code(), Some(2));
}
