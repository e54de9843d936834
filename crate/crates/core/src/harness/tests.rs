use super::*;

const TIME_CONSTANT: &str = r#"
replicas = 8
seed = 3

[experiment]
kind = "time-constant"
direction = [1, 0]
n = [16, 32]
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn every_kind_parses_and_validates() {
    let bodies = [
        "kind = \"shape\"\ndirections = [[1.0, 0.0], [1.0, 1.0]]\nradius = 8.0",
        "kind = \"sigma\"\nr = [4, 8, 16]",
        "kind = \"transverse\"\ndim = 2\nr = [4, 8]",
        "kind = \"crossing-density\"\ntheta = [1.0, 0.0]\nmu = 0.42\ns = [4.0, 8.0]\nwindow = { lo = [-4.0], hi = [4.0] }",
        "kind = \"coalesce\"\ntheta = [1.0, 0.0]\nmu = 0.42\nseparation = 1\nr = [4.0, 8.0]",
        "kind = \"midpoint\"\nv = [[4, 0], [8, 0]]",
        "kind = \"hg-gap\"\nn = [4, 8]",
    ];
    for b in bodies {
        let cfg = ExperimentConfig::from_toml(&format!("replicas = 4\n[experiment]\n{b}\n")).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{b}: {e}"));
    }
}

#[test]
fn bad_configs_are_validation_errors() {
    let cases = [
        "replicas = 4\n[experiment]\nkind = \"sigma\"\nr = [4]\n[distribution]\nkind = \"exponential\"\nrate = -1.0\n",
        "replicas = 4\n[experiment]\nkind = \"sigma\"\nr = [4]\nbogus = 1\n",
        "replicas = 4\n[experiment]\nkind = \"nonsense\"\n",
        "replicas = 1\n[experiment]\nkind = \"sigma\"\nr = [4]\n",
        "replicas = 4\n[experiment]\nkind = \"coalesce\"\ntheta = [1.0, 0.0]\nmu = 0.42\nseparation = 1\nr = [8.0, 4.0]\n",
        "replicas = 4\n[experiment]\nkind = \"midpoint\"\nv = [[4, 0]]\n[distribution]\nkind = \"test-table\"\ndefault = 1.0\n",
    ];
    for c in cases {
        let e = ExperimentConfig::from_toml(c).and_then(|x| x.validate()).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{c}");
    }
    let forced = "replicas = 4\n[experiment]\nkind = \"midpoint\"\nv = [[4, 0]]\n[distribution]\nkind = \"test-table\"\ndefault = 1.0\n[options]\nforce = true\n";
    ExperimentConfig::from_toml(forced).unwrap().validate().unwrap();
}

#[test]
fn rejected_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.toml", &TIME_CONSTANT.replace("[experiment]", "[distribution]\nkind = \"uniform\"\na = 2.0\nb = 1.0\n[experiment]"));
    let out = dir.path().join("out");
    let e = run(&p, Some(1), None, Some(&out)).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn reruns_append_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "tc.toml", TIME_CONSTANT);
    let out = dir.path().join("out");
    let a = run(&p, Some(2), None, Some(&out)).unwrap();
    let first = fs::read_to_string(&a.jsonl).unwrap();
    let b = run(&p, Some(2), None, Some(&out)).unwrap();
    let both = fs::read_to_string(&b.jsonl).unwrap();
    assert_ne!(a.run_id, b.run_id);
    assert!(both.starts_with(&first));
    assert_eq!(both.lines().count(), 2 * first.lines().count());
    assert!(check_record_hashes(&a.jsonl).unwrap());
    assert!(a.csv.exists() && b.csv.exists());
    // a record edited after the fact no longer matches its config
    fs::write(&a.jsonl, both.replacen("\"replicas\":8", "\"replicas\":9", 1)).unwrap();
    assert!(!check_record_hashes(&a.jsonl).unwrap());
}

#[test]
fn thread_count_does_not_change_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "tc.toml", TIME_CONSTANT);
    let a = run(&p, Some(1), Some(11), Some(&dir.path().join("a"))).unwrap();
    let b = run(&p, Some(4), Some(11), Some(&dir.path().join("b"))).unwrap();
    assert_eq!(fs::read(&a.jsonl).unwrap(), fs::read(&b.jsonl).unwrap());
    assert_eq!(fs::read(&a.csv).unwrap(), fs::read(&b.csv).unwrap());
    let c = run(&p, Some(1), Some(12), Some(&dir.path().join("c"))).unwrap();
    assert_ne!(a.config_hash, c.config_hash);
}

#[test]
fn hash_ignores_output_path() {
    let mut a = ExperimentConfig::from_toml(TIME_CONSTANT).unwrap();
    let h = a.hash();
    a.out = Some("elsewhere".into());
    assert_eq!(a.hash(), h);
    a.seed += 1;
    assert_ne!(a.hash(), h);
}

#[test]
fn suites_pass_on_clean_weights() {
    let o = VerifyOptions { seeds: Some(2), ..VerifyOptions::default() };
    for s in [Suite::Oracle, Suite::Duality] {
        let r = verify(s, &o);
        assert!(r.all_pass(), "{:?}", r.lines());
    }
}

#[test]
fn negated_weights_break_the_metric_suite() {
    let r = verify(Suite::Metric, &VerifyOptions { inject_fault: true, ..VerifyOptions::default() });
    let tri = r.checks.iter().find(|c| c.name == "triangle inequality").unwrap();
    assert!(!tri.pass, "{:?}", r.lines());
    assert!(verify(Suite::Metric, &VerifyOptions::default()).all_pass());
}
